"""Command-line front end: one subcommand per pipeline stage."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import vaccinate
from .experiment import (
    CampaignConfig,
    StrategySpec,
    run_campaign,
    run_village_pipeline,
)
from .fcd import TruncationParams, truncate
from .graph import read_graph, write_edge_list
from .metrics import (
    CHARACTERISTIC_NAMES,
    degree_mixing_matrix,
    village_characteristics,
)
from .netgen import McmcParams, convergence_check, sample_ensemble
from .regress import RegressionDataset, standardize, subset_search
from .rngcore import derive_stream
from .sir import SirParams, run_sir


def _cmd_metrics(args) -> int:
    g = read_graph(args.input)
    chars = village_characteristics(g)
    values = chars.as_array()
    out = {name: (None if np.isnan(v) else float(v))
           for name, v in zip(CHARACTERISTIC_NAMES, values)}
    print(json.dumps(out, indent=2))
    return 0


def _cmd_truncate(args) -> int:
    g = read_graph(args.input)
    truncated = truncate(g, TruncationParams(k=args.k, rng_seed=args.seed))
    write_edge_list(truncated, args.output)
    print(f"wrote {truncated.n_edges} edges over {truncated.n_nodes} nodes")
    return 0


def _load_vaccinated(path, g):
    ids = [line.strip() for line in Path(path).read_text().splitlines()
           if line.strip()]
    return tuple(ids)


def _cmd_simulate(args) -> int:
    g = read_graph(args.input)
    params = SirParams(beta=args.beta, gamma=args.gamma,
                       seed_fraction=args.seed_fraction)
    vaccinated = _load_vaccinated(args.vaccinated, g) if args.vaccinated else ()
    print("run,cumulative_incidence,n_seeds,seed_caused,duration_steps")
    for run in range(args.runs):
        rng = derive_stream(args.seed, ("simulate", run)).generator
        out = run_sir(g, params, vaccinated=vaccinated, rng=rng)
        print(f"{run},{out.cumulative_incidence:.10g},{out.n_seeds},"
              f"{out.seed_caused_infections},{out.duration_steps}")
    return 0


def _cmd_vaccinate(args) -> int:
    g = read_graph(args.input)
    rng = derive_stream(args.seed, ("vaccinate", 0)).generator
    s = args.strategy
    if s == vaccinate.STRATEGY_NONE:
        plan = vaccinate.select_none(g)
    elif s == vaccinate.STRATEGY_RANDOM:
        plan = vaccinate.select_random(g, args.coverage, rng)
    elif s == vaccinate.STRATEGY_NOMINATION:
        plan = vaccinate.select_nomination(g, args.coverage, rng)
    elif s == vaccinate.STRATEGY_HIGH_DEGREE:
        if args.cutoff is None:
            print("high_degree requires --cutoff", file=sys.stderr)
            return 2
        plan = vaccinate.select_high_degree(g, args.coverage, args.cutoff, rng)
    elif s == vaccinate.STRATEGY_HIGHEST_DEGREE:
        plan = vaccinate.select_top_by_degree(g, args.coverage, rng)
    elif s == vaccinate.STRATEGY_MOST_CENTRAL:
        plan = vaccinate.select_top_by_betweenness(g, args.coverage, rng)
    else:
        print(f"unknown strategy {s}", file=sys.stderr)
        return 2
    for node in plan.selected:
        print(node)
    print(f"# achieved coverage {plan.achieved_coverage:.6f}, "
          f"interviews {plan.interviews_conducted}", file=sys.stderr)
    return 0


def _cmd_netgen(args) -> int:
    ref = read_graph(args.target)
    target = degree_mixing_matrix(ref)
    md = 2.0 * ref.n_edges / ref.n_nodes
    params = McmcParams(
        target=target, n_nodes=ref.n_nodes, target_mean_degree=md,
        burn_in=args.burn_in, thinning=args.thinning,
        concentration=args.concentration, rng_seed=args.seed,
    )
    samples, report = sample_ensemble(params, args.n_samples)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, g in enumerate(samples):
        write_edge_list(g, out / f"sample_{i:04d}.edges")
    lines = ["step,mean_degree,dmm_distance,accepted"]
    for i, (m, d) in enumerate(zip(report.mean_degree_trace,
                                   report.dmm_distance_trace)):
        step = (i + 1) * args.thinning
        lines.append(f"{step},{m:.10g},{d:.10g},{report.accepted_fraction:.10g}")
    (out / "convergence.csv").write_text("\n".join(lines) + "\n")
    check = convergence_check(report, md)
    status = "converged" if check.passed else "NOT converged"
    print(f"{args.n_samples} samples written to {out}; chain {status}")
    for reason in check.reasons:
        print(f"  {reason}")
    return 0 if check.passed else 1


def _cmd_regress(args) -> int:
    rows = Path(args.input).read_text().strip().split("\n")
    header = rows[0].split(",")
    data = np.array([r.split(",") for r in rows[1:]], dtype=object)
    y = data[:, header.index("incidence")].astype(float)
    from .metrics import PREDICTOR_NAMES

    x = np.column_stack([
        data[:, header.index(name)].astype(float) for name in PREDICTOR_NAMES
    ])
    ds = standardize(RegressionDataset(
        incidence=y,
        characteristics=x,
        network_ids=data[:, header.index("network_id")],
        village_ids=data[:, header.index("village_id")],
    ))
    rng = derive_stream(args.seed, ("regress-folds", 0)).generator
    models = subset_search(ds, args.max_subset, args.folds, rng)
    full_rmse = next(m.cv_rmse for m in models
                     if len(m.predictor_set) == len(PREDICTOR_NAMES))
    print(",".join(PREDICTOR_NAMES) + ",n_predictors,cv_rmse,aic,rmse_vs_full")
    for m in models:
        flags = ["1" if j in m.predictor_set else "0"
                 for j in range(len(PREDICTOR_NAMES))]
        print(",".join(flags) + f",{len(m.predictor_set)},{m.cv_rmse:.10g},"
              f"{m.aic:.10g},{m.cv_rmse - full_rmse:+.10g}")
    return 0


def _sir_from_config(cfg) -> SirParams:
    return SirParams(
        beta=float(cfg["beta"]),
        gamma=float(cfg["gamma"]),
        seed_fraction=float(cfg["seed_fraction"]),
    )


def _cmd_campaign(args) -> int:
    cfg = yaml.safe_load(Path(args.config).read_text())
    strategies = tuple(
        StrategySpec(
            strategy=s["strategy"],
            cutoff=s.get("cutoff"),
            fcd_k=s.get("fcd_k"),
        )
        for s in cfg["strategies"]
    )
    config = CampaignConfig(
        villages=tuple(cfg["villages"]),
        strategies=strategies,
        coverage=float(cfg["coverage"]),
        sir=_sir_from_config(cfg["sir"]),
        runs_per_cell=int(cfg["runs_per_cell"]),
        master_seed=int(cfg["master_seed"]),
        output_dir=cfg["output_dir"],
        tie_threshold=int(cfg.get("tie_threshold", 1)),
        freeze_truncation=bool(cfg.get("freeze_truncation", False)),
    )
    records, rows = run_campaign(config)
    expected = len(config.villages) * len(config.strategies) * config.runs_per_cell
    if len(records) != expected:
        print(f"incomplete: {len(records)} of {expected} cells", file=sys.stderr)
        return 1
    print(f"{len(records)} runs -> {config.output_dir}")
    for row in rows:
        label = row.strategy
        if row.cutoff is not None:
            label += f" cutoff={row.cutoff}"
        if row.fcd_k is not None:
            label += f" k={row.fcd_k}"
        print(f"  {label}: {row.mean_incidence:.2f} "
              f"[{row.ci_low:.2f}, {row.ci_high:.2f}]")
    return 0


def _cmd_village_pipeline(args) -> int:
    cfg = yaml.safe_load(Path(args.config).read_text())
    villages = [(Path(p).name, read_graph(p)) for p in sorted(
        cfg["villages"], key=lambda p: Path(p).name
    )]
    result = run_village_pipeline(
        villages,
        ensemble_size=int(cfg["ensemble_size"]),
        sir_params=_sir_from_config(cfg["sir"]),
        k_values=[int(k) for k in cfg["k_values"]],
        runs_per_network=int(cfg["runs_per_network"]),
        master_seed=int(cfg["master_seed"]),
        output_dir=cfg["output_dir"],
        burn_in=int(cfg.get("burn_in", 3_000_000)),
        thinning=int(cfg.get("thinning", 20_000)),
        concentration=float(cfg.get("concentration", 8e3)),
        max_chain_attempts=int(cfg.get("max_chain_attempts", 5)),
        max_villages=cfg.get("max_villages"),
        k_folds=int(cfg.get("k_folds", 10)),
        max_subset_size=int(cfg.get("max_subset_size", 3)),
    )
    included = [log for log in result.logs if log.included]
    print(f"{len(included)} villages included, "
          f"{len(result.logs) - len(included)} excluded; "
          f"{result.dataset.n_rows} dataset rows")
    best = result.models[0]
    print(f"best model: {best.predictor_names} cv_rmse {best.cv_rmse:.4g}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vaxnet")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="characteristics of one network")
    p.add_argument("--input", required=True)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("truncate", help="fixed-choice truncation")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_truncate)

    p = sub.add_parser("simulate", help="SIR runs on one network")
    p.add_argument("--input", required=True)
    p.add_argument("--beta", type=float, default=0.25)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--seed-fraction", type=float, default=0.01)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vaccinated", help="file with one node id per line")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("vaccinate", help="select a vaccination set")
    p.add_argument("--input", required=True)
    p.add_argument("--strategy", required=True,
                   choices=list(vaccinate.STRATEGIES))
    p.add_argument("--coverage", type=float, default=0.1)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_vaccinate)

    p = sub.add_parser("netgen", help="sample DMM-matched networks")
    p.add_argument("--target", required=True,
                   help="edge list of the reference graph")
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=100_000)
    p.add_argument("--thinning", type=int, default=1_000)
    p.add_argument("--concentration", type=float, default=80.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=_cmd_netgen)

    p = sub.add_parser("regress", help="subset search on a dataset CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--max-subset", type=int, default=3)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_regress)

    p = sub.add_parser("campaign", help="vaccination comparison experiment")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_campaign)

    p = sub.add_parser("village-pipeline", help="ensemble regression experiment")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_village_pipeline)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
