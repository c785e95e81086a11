"""Campaign and village-pipeline orchestration with deterministic seeding.

Every stochastic draw in a campaign comes from a stream keyed by
(master_seed, village index, strategy name, variant, run index), so results
are identical regardless of execution order or worker count. Village
indices follow the lexicographic order of the village file names.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import vaccinate
from .fcd import TruncationParams, truncate
from .graph import Graph, read_graph
from .metrics import degree_mixing_matrix
from .netgen import McmcParams, convergence_check, sample_ensemble
from .regress import (
    RegressionDataset,
    dataset_from_graphs,
    fcd_prediction_sweep,
    standardize,
    subset_search,
)
from .rngcore import derive_stream
from .sir import SirParams, run_sir

_NO_VARIANT = 10 ** 6


@dataclass(frozen=True)
class StrategySpec:
    """One campaign arm: a selection strategy plus its variant parameter."""

    strategy: str
    cutoff: Optional[int] = None
    fcd_k: Optional[int] = None

    def __post_init__(self):
        if self.strategy not in vaccinate.STRATEGIES:
            raise ValueError(f"unknown strategy: {self.strategy}")
        if self.strategy == vaccinate.STRATEGY_HIGH_DEGREE and self.cutoff is None:
            raise ValueError("high_degree requires a cutoff")
        if self.cutoff is not None and self.cutoff < 0:
            raise ValueError("cutoff must be non-negative")
        if self.fcd_k is not None and self.fcd_k < 0:
            raise ValueError("fcd_k must be non-negative")

    @property
    def variant(self) -> int:
        if self.cutoff is not None:
            return self.cutoff
        if self.fcd_k is not None:
            return self.fcd_k
        return _NO_VARIANT

    def label(self) -> str:
        parts = [self.strategy]
        if self.cutoff is not None:
            parts.append(f"cutoff={self.cutoff}")
        if self.fcd_k is not None:
            parts.append(f"k={self.fcd_k}")
        return " ".join(parts)


@dataclass(frozen=True)
class CampaignConfig:
    villages: Tuple[str, ...]
    strategies: Tuple[StrategySpec, ...]
    coverage: float
    sir: SirParams
    runs_per_cell: int
    master_seed: int
    output_dir: str
    tie_threshold: int = 1
    freeze_truncation: bool = False

    def __post_init__(self):
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be >= 1")
        if not 0.0 < self.coverage < 1.0:
            raise ValueError("coverage must lie in (0, 1)")
        if not 1 <= self.tie_threshold <= 12:
            raise ValueError("tie_threshold must lie in 1..12")
        object.__setattr__(self, "villages", tuple(str(v) for v in self.villages))
        object.__setattr__(self, "strategies", tuple(self.strategies))


@dataclass(frozen=True)
class RunRecord:
    village_index: int
    village: str
    strategy: str
    cutoff: Optional[int]
    fcd_k: Optional[int]
    run: int
    n_nodes: int
    n_vaccinated: int
    n_seeds: int
    cumulative_incidence: float


@dataclass(frozen=True)
class SummaryRow:
    strategy: str
    cutoff: Optional[int]
    fcd_k: Optional[int]
    mean_incidence: float
    ci_low: float
    ci_high: float
    min_village_mean: float
    max_village_mean: float
    n_villages: int
    ci_flagged: bool = False


def _worker_count() -> int:
    env = os.environ.get("VAXNET_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def _load_villages(paths: Sequence[str]) -> List[Tuple[str, Graph]]:
    ordered = sorted(paths, key=lambda p: Path(p).name)
    loaded = []
    for p in ordered:
        try:
            g = read_graph(p)
        except Exception as exc:
            raise ValueError(f"village {Path(p).name}: {exc}") from exc
        loaded.append((Path(p).name, g))
    return loaded


def _cell_stream(master_seed, village_index, spec, run, stage):
    return derive_stream(
        master_seed,
        ("village", village_index),
        (spec.strategy, spec.variant),
        (stage, run),
    ).generator


def _observed_graph(g, spec, config, village_index, run):
    if spec.fcd_k is None:
        return g
    obs_run = 0 if config.freeze_truncation else run
    seed_rng = _cell_stream(config.master_seed, village_index, spec, obs_run, "truncate")
    seed = int(seed_rng.integers(0, 2 ** 63 - 1))
    return truncate(g, TruncationParams(k=spec.fcd_k, rng_seed=seed))


def _select(g_observed, spec, config, village_index, run, score_cache):
    rng = _cell_stream(config.master_seed, village_index, spec, run, "plan")
    s = spec.strategy
    if s == vaccinate.STRATEGY_NONE:
        return vaccinate.select_none(g_observed)
    if s == vaccinate.STRATEGY_RANDOM:
        return vaccinate.select_random(g_observed, config.coverage, rng)
    if s == vaccinate.STRATEGY_NOMINATION:
        return vaccinate.select_nomination(g_observed, config.coverage, rng)
    if s == vaccinate.STRATEGY_HIGH_DEGREE:
        return vaccinate.select_high_degree(g_observed, config.coverage, spec.cutoff, rng)
    # Top-of-ranking strategies: the score vector is deterministic for a
    # fixed observed graph, so cache it when the observed graph is fixed
    # across runs (no truncation, or frozen truncation).
    cacheable = spec.fcd_k is None or config.freeze_truncation
    key = (village_index, spec.strategy, spec.variant)
    if s == vaccinate.STRATEGY_HIGHEST_DEGREE:
        return vaccinate.select_top_by_degree(
            g_observed, config.coverage, rng, observation_k=spec.fcd_k
        )
    if cacheable and key in score_cache:
        scores = score_cache[key]
    else:
        from .metrics import betweenness_all

        scores = betweenness_all(g_observed)
        if cacheable:
            score_cache[key] = scores
    return vaccinate._select_top(
        g_observed, config.coverage, scores, rng,
        vaccinate.STRATEGY_MOST_CENTRAL, spec.fcd_k,
    )


def _run_cell(args):
    config, village_index, name, g, spec = args
    records = []
    obs = None
    score_cache = {}
    for run in range(config.runs_per_cell):
        if spec.fcd_k is not None and (obs is None or not config.freeze_truncation):
            obs = _observed_graph(g, spec, config, village_index, run)
        plan = _select(obs if spec.fcd_k is not None else g,
                       spec, config, village_index, run, score_cache)
        sir_rng = _cell_stream(config.master_seed, village_index, spec, run, "sir")
        outcome = run_sir(g, config.sir, vaccinated=plan.selected, rng=sir_rng)
        records.append(RunRecord(
            village_index=village_index,
            village=name,
            strategy=spec.strategy,
            cutoff=spec.cutoff,
            fcd_k=spec.fcd_k,
            run=run,
            n_nodes=g.n_nodes,
            n_vaccinated=len(plan.selected),
            n_seeds=outcome.n_seeds,
            cumulative_incidence=outcome.cumulative_incidence * 100.0,
        ))
    return records


def summarize(records: Sequence[RunRecord]) -> List[SummaryRow]:
    """Mean of village means per cell, CI over villages."""
    cells: Dict[Tuple, Dict[int, List[float]]] = {}
    for r in records:
        cell = (r.strategy, r.cutoff, r.fcd_k)
        cells.setdefault(cell, {}).setdefault(r.village_index, []).append(
            r.cumulative_incidence
        )
    rows = []
    for (strategy, cutoff, fcd_k), by_village in sorted(
        cells.items(), key=lambda kv: (kv[0][0], repr(kv[0][1]), repr(kv[0][2]))
    ):
        means = np.array([np.mean(v) for _, v in sorted(by_village.items())])
        m = float(means.mean())
        if len(means) > 1:
            half = 1.96 * float(means.std(ddof=1)) / math.sqrt(len(means))
            row = SummaryRow(strategy, cutoff, fcd_k, m, m - half, m + half,
                             float(means.min()), float(means.max()), len(means))
        else:
            row = SummaryRow(strategy, cutoff, fcd_k, m, m, m,
                             float(means.min()), float(means.max()), len(means),
                             ci_flagged=True)
        rows.append(row)
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def _write_runs_csv(path: Path, records: Sequence[RunRecord]) -> None:
    header = ("village,strategy,cutoff,fcd_k,run,n_nodes,n_vaccinated,"
              "n_seeds,cumulative_incidence")
    lines = [header]
    for r in records:
        lines.append(",".join([
            r.village, r.strategy, _fmt(r.cutoff), _fmt(r.fcd_k), str(r.run),
            str(r.n_nodes), str(r.n_vaccinated), str(r.n_seeds),
            _fmt(r.cumulative_incidence),
        ]))
    path.write_text("\n".join(lines) + "\n")


def _write_summary_csv(path: Path, rows: Sequence[SummaryRow]) -> None:
    header = ("strategy,cutoff,fcd_k,mean_incidence,ci_low,ci_high,"
              "min_village_mean,max_village_mean,n_villages,ci_flagged")
    lines = [header]
    for s in rows:
        lines.append(",".join([
            s.strategy, _fmt(s.cutoff), _fmt(s.fcd_k), _fmt(s.mean_incidence),
            _fmt(s.ci_low), _fmt(s.ci_high), _fmt(s.min_village_mean),
            _fmt(s.max_village_mean), str(s.n_villages),
            "1" if s.ci_flagged else "0",
        ]))
    path.write_text("\n".join(lines) + "\n")


def _write_metadata(path: Path, config: CampaignConfig) -> None:
    lines = [
        f"master_seed={config.master_seed}",
        f"coverage={_fmt(config.coverage)}",
        f"runs_per_cell={config.runs_per_cell}",
        f"tie_threshold={config.tie_threshold}",
        f"freeze_truncation={config.freeze_truncation}",
        f"beta={_fmt(config.sir.beta)}",
        f"gamma={_fmt(config.sir.gamma)}",
        f"seed_fraction={_fmt(config.sir.seed_fraction)}",
        "villages=" + ";".join(Path(v).name for v in config.villages),
        "strategies=" + ";".join(s.label() for s in config.strategies),
    ]
    path.write_text("\n".join(lines) + "\n")


def run_campaign(config: CampaignConfig):
    """Execute every (village, strategy, run) cell and write the outputs.

    Returns (records, summary rows). The per-run CSV is sorted by village
    index, strategy position, and run index, and is byte-identical across
    reruns with the same config and master seed.
    """
    villages = _load_villages(config.villages)
    for _, g in villages:
        if g.n_nodes < 2:
            raise ValueError("village graph too small")
    work = []
    for vi, (name, g) in enumerate(villages):
        for spec in config.strategies:
            work.append((config, vi, name, g, spec))
    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_cell, work))
    else:
        chunks = [_run_cell(w) for w in work]
    records: List[RunRecord] = []
    order = {spec: i for i, spec in enumerate(config.strategies)}
    for chunk in chunks:
        records.extend(chunk)
    records.sort(key=lambda r: (
        r.village_index, order[StrategySpec(r.strategy, r.cutoff, r.fcd_k)], r.run
    ))
    rows = summarize(records)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_runs_csv(out / "runs.csv", records)
    _write_summary_csv(out / "summary.csv", rows)
    _write_metadata(out / "metadata.txt", config)
    return records, rows


@dataclass(frozen=True)
class PipelineVillageLog:
    village: str
    included: bool
    attempts: int
    reason: str


@dataclass(frozen=True)
class PipelineResult:
    dataset: RegressionDataset
    models: List
    sweep: Dict
    logs: List[PipelineVillageLog]
    ensemble_mean_incidence: float


def run_village_pipeline(
    villages: Sequence[Tuple[str, Graph]],
    ensemble_size: int,
    sir_params: SirParams,
    k_values: Sequence[int],
    runs_per_network: int,
    master_seed: int,
    output_dir: str,
    burn_in: int = 3_000_000,
    thinning: int = 20_000,
    concentration: float = 8e3,
    max_chain_attempts: int = 5,
    max_villages: Optional[int] = None,
    k_folds: int = 10,
    max_subset_size: int = 3,
    sweep_predictors: Tuple[int, ...] = (0, 1),
    sampler: Optional[
        Callable[[int, str, McmcParams, int], Tuple[List[Graph], object]]
    ] = None,
) -> PipelineResult:
    """DMM-matched ensembles per village, SIR per sample, then regression.

    Each village's chain is retried with fresh seeds until the convergence
    diagnostics pass or the attempt budget runs out; villages that never
    pass are excluded with a logged reason, and at most max_villages
    converged villages (in input order) enter the dataset.

    sampler replaces the ensemble draw: it is called with
    (village_index, village_name, params, ensemble_size) and must return
    (samples, report). The report still goes through the convergence
    check, so a replacement that should always be accepted has to return
    one that passes.
    """
    logs: List[PipelineVillageLog] = []
    graphs, run_means, network_ids, village_ids = [], [], [], []
    incidence_by_network = []
    included = 0
    for vi, (name, g) in enumerate(villages):
        if max_villages is not None and included >= max_villages:
            break
        target = degree_mixing_matrix(g)
        target_md = 2.0 * g.n_edges / g.n_nodes
        ensemble = None
        attempts = 0
        reason = ""
        for attempt in range(max_chain_attempts):
            attempts = attempt + 1
            chain_seed = int(derive_stream(
                master_seed, ("pipeline-chain", vi), ("attempt", attempt)
            ).integers(0, 2 ** 63 - 1))
            params = McmcParams(
                target=target, n_nodes=g.n_nodes, target_mean_degree=target_md,
                burn_in=burn_in, thinning=thinning,
                concentration=concentration, rng_seed=chain_seed,
            )
            if sampler is None:
                samples, report = sample_ensemble(params, ensemble_size)
            else:
                samples, report = sampler(vi, name, params, ensemble_size)
            check = convergence_check(report, target_md)
            if check.passed:
                ensemble = samples
                break
            reason = "; ".join(check.reasons)
        if ensemble is None:
            logs.append(PipelineVillageLog(name, False, attempts,
                                           f"chain did not converge: {reason}"))
            continue
        logs.append(PipelineVillageLog(name, True, attempts, "converged"))
        for si, sample in enumerate(ensemble):
            zz = np.empty(runs_per_network)
            for run in range(runs_per_network):
                rng = derive_stream(
                    master_seed, ("pipeline-sir", vi), ("sample", si), ("run", run)
                ).generator
                outcome = run_sir(sample, sir_params, rng=rng)
                zz[run] = outcome.cumulative_incidence * 100.0
            graphs.append(sample)
            incidence_by_network.append(zz)
            network_ids.append(vi * 10_000 + si)
            village_ids.append(vi)
            run_means.append(zz.mean())
        included += 1
    if not graphs:
        raise ValueError("no village ensemble passed the convergence check")
    raw = dataset_from_graphs(
        graphs, incidence_by_network, network_ids, village_ids
    )
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    # The dataset and the exclusion log land on disk before any model
    # fitting, so a failed analysis still leaves the expensive part
    # recoverable.
    _write_dataset_csv(out / "dataset.csv", raw)
    _write_pipeline_log(out / "pipeline_log.txt", logs)
    dataset = standardize(raw)
    model_rng = derive_stream(master_seed, ("pipeline-folds", 0)).generator
    try:
        models = subset_search(dataset, max_subset_size, k_folds, model_rng)
        sweep = fcd_prediction_sweep(
            graphs, incidence_by_network, network_ids, village_ids,
            k_values, sweep_predictors, k_folds,
            rng_seed=master_seed,
        )
    except Exception as exc:
        with open(out / "pipeline_log.txt", "a") as fh:
            fh.write(f"analysis failed: {exc}\n")
            fh.flush()
        raise
    _write_models_csv(out / "models.csv", models)
    _write_sweep_csv(out / "fcd_sweep.csv", sweep)
    return PipelineResult(
        dataset=dataset,
        models=models,
        sweep=sweep,
        logs=logs,
        ensemble_mean_incidence=float(np.mean(run_means)),
    )


def _write_dataset_csv(path: Path, dataset: RegressionDataset) -> None:
    from .metrics import PREDICTOR_NAMES

    header = "village_id,network_id," + ",".join(PREDICTOR_NAMES) + ",incidence_pct"
    lines = [header]
    for i in range(dataset.n_rows):
        cells = [str(int(dataset.village_ids[i])), str(int(dataset.network_ids[i]))]
        cells += [_fmt(x) for x in dataset.characteristics[i]]
        cells.append(_fmt(dataset.incidence[i]))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def _write_models_csv(path: Path, models) -> None:
    from .metrics import PREDICTOR_NAMES

    header = ",".join(PREDICTOR_NAMES) + ",n_predictors,cv_rmse,aic"
    lines = [header]
    for m in models:
        flags = ["1" if j in m.predictor_set else "0"
                 for j in range(len(PREDICTOR_NAMES))]
        lines.append(",".join(
            flags + [str(len(m.predictor_set)), _fmt(m.cv_rmse), _fmt(m.aic)]
        ))
    path.write_text("\n".join(lines) + "\n")


def _write_sweep_csv(path: Path, sweep) -> None:
    lines = ["k,cv_rmse,aic"]
    for k in sorted(sweep):
        m = sweep[k]
        lines.append(f"{k},{_fmt(m.cv_rmse)},{_fmt(m.aic)}")
    path.write_text("\n".join(lines) + "\n")


def _write_pipeline_log(path: Path, logs) -> None:
    lines = []
    for log in logs:
        status = "included" if log.included else "excluded"
        lines.append(f"{log.village}: {status} after {log.attempts} "
                     f"chain attempt(s): {log.reason}")
    path.write_text("\n".join(lines) + "\n")
