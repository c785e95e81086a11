"""Epidemic kernel: conservation, degenerate limits, stepping rules."""

import math

import numpy as np
import pytest

from vaxnet.graph import graph_from_indices
from vaxnet.rngcore import derive_stream
from vaxnet.sir import SirOutcome, SirParams, estimate_r0, run_sir


def random_graph(n, p, rng):
    upper = np.triu(rng.random((n, n)) < p, k=1)
    a, b = np.nonzero(upper)
    return graph_from_indices(n, np.column_stack([a, b]))


def test_counts_conserved_every_step():
    rng = np.random.default_rng(0)
    g = random_graph(200, 0.04, rng)
    n_vax = 20
    vax = [int(i) for i in rng.choice(200, size=n_vax, replace=False)]
    params = SirParams(beta=0.3, gamma=0.15, seed_fraction=0.02, rng_seed=4)
    out = run_sir(g, params, vaccinated=vax, record_steps=True)
    counts = out.per_step_counts
    assert counts is not None and len(counts) >= 1
    assert np.all(counts.sum(axis=1) + n_vax == 200)
    # susceptibles never increase, recovered never decrease
    assert np.all(np.diff(counts[:, 0]) <= 0)
    assert np.all(np.diff(counts[:, 2]) >= 0)
    assert counts[-1, 1] == 0


def test_beta_zero_returns_exactly_seed_fraction():
    rng = np.random.default_rng(1)
    g = random_graph(150, 0.05, rng)
    params = SirParams(beta=0.0, gamma=0.2, seed_fraction=0.04, rng_seed=9)
    out = run_sir(g, params)
    assert out.n_seeds == math.ceil(0.04 * 150)
    assert out.cumulative_incidence == pytest.approx(out.n_seeds / 150)
    assert out.seed_caused_infections == 0


def test_all_but_seeds_vaccinated_blocks_spread():
    rng = np.random.default_rng(2)
    g = random_graph(100, 0.1, rng)
    # leave exactly the seed quota unvaccinated
    n_seeds = math.ceil(0.02 * 100)
    vax = list(range(n_seeds, 100))
    params = SirParams(beta=1.0, gamma=0.3, seed_fraction=0.02, rng_seed=3)
    out = run_sir(g, params, vaccinated=vax)
    assert out.n_seeds == n_seeds
    assert out.cumulative_incidence == pytest.approx(n_seeds / 100)


def test_one_transmission_attempt_per_step():
    # star with an instantly recovering center: whatever happens, the
    # center contacts one neighbor only, so at most one leaf is infected
    star = graph_from_indices(9, np.array([[0, i] for i in range(1, 9)]))
    for seed in range(40):
        rng = derive_stream(seed, ("star", 0)).generator
        params = SirParams(beta=1.0, gamma=1.0, seed_fraction=0.01)
        out = run_sir(star, params, vaccinated=list(range(1, 5)), rng=rng)
        # force the seed onto the center by vaccinating half the leaves?
        # no: seed lands on any unvaccinated node; a leaf seed reaches
        # the center, which then has one step before recovery
        assert out.cumulative_incidence * 9 <= 3 + 1e-9


def test_attempts_spend_on_nonsusceptible_contacts():
    # two nodes joined by an edge, plus a pendant on node 1: with the
    # pair infected, node 1 can waste its step on node 0, so the pendant
    # escapes more often than its per-step contact chance alone suggests
    g = graph_from_indices(3, np.array([[0, 1], [1, 2]]))
    params = SirParams(beta=1.0, gamma=1.0, seed_fraction=0.5)
    hits = 0
    trials = 4000
    for s in range(trials):
        rng = derive_stream(s, ("waste", 0)).generator
        out = run_sir(g, params, rng=rng)
        hits += out.cumulative_incidence == pytest.approx(1.0)
    # two seeds among three nodes, everyone recovers after one step.
    # seeds {0,2}: node 0 must pick 1, infected for sure. seeds {0,1} or
    # {1,2}: the middle node splits its single attempt between an
    # already-infected side and the open side, so the third node is
    # reached half the time. full-infection chance = 1/3 + 2/3 * 1/2.
    frac = hits / trials
    assert abs(frac - 2 / 3) < 0.03


def test_deterministic_given_seed():
    rng = np.random.default_rng(5)
    g = random_graph(120, 0.06, rng)
    params = SirParams(beta=0.25, gamma=0.1, seed_fraction=0.02, rng_seed=77)
    a = run_sir(g, params)
    b = run_sir(g, params)
    assert a.cumulative_incidence == b.cumulative_incidence
    assert a.duration_steps == b.duration_steps
    assert a.seed_caused_infections == b.seed_caused_infections


def test_vaccinated_accepts_ids_and_indices():
    g = graph_from_indices(4, np.array([[0, 1], [1, 2], [2, 3]]),
                           node_ids=("a", "b", "c", "d"))
    params = SirParams(beta=0.0, gamma=0.5, seed_fraction=0.25, rng_seed=1)
    out_ids = run_sir(g, params, vaccinated=["a", "b"])
    out_idx = run_sir(g, params, vaccinated=[0, 1])
    assert out_ids.n_seeds == out_idx.n_seeds == 1
    with pytest.raises(ValueError, match="not in graph"):
        run_sir(g, params, vaccinated=["zz"])
    with pytest.raises(ValueError, match="out of range"):
        run_sir(g, params, vaccinated=[9])


def test_seed_quota_errors():
    g = graph_from_indices(4, np.array([[0, 1], [1, 2], [2, 3]]))
    params = SirParams(beta=0.1, gamma=0.5, seed_fraction=0.5, rng_seed=1)
    with pytest.raises(ValueError, match="seeds"):
        run_sir(g, params, vaccinated=[0, 1, 2])
    with pytest.raises(ValueError):
        run_sir(graph_from_indices(0, np.zeros((0, 2), dtype=int)), params)


def test_param_validation():
    with pytest.raises(ValueError):
        SirParams(beta=1.2, gamma=0.1, seed_fraction=0.01)
    with pytest.raises(ValueError):
        SirParams(beta=0.2, gamma=-0.1, seed_fraction=0.01)
    with pytest.raises(ValueError):
        SirParams(beta=0.2, gamma=0.1, seed_fraction=0.0)


def test_estimate_r0_is_mean_ratio():
    outs = [
        SirOutcome(0.2, n_seeds=4, seed_caused_infections=6, duration_steps=9),
        SirOutcome(0.1, n_seeds=2, seed_caused_infections=1, duration_steps=5),
    ]
    assert estimate_r0(outs) == pytest.approx((6 / 4 + 1 / 2) / 2)
    with pytest.raises(ValueError):
        estimate_r0([])


def test_epidemic_dies_out_and_duration_reported():
    rng = np.random.default_rng(6)
    g = random_graph(300, 0.03, rng)
    params = SirParams(beta=0.3, gamma=0.2, seed_fraction=0.01, rng_seed=12)
    out = run_sir(g, params, record_steps=True)
    assert out.duration_steps == len(out.per_step_counts) - 1
    assert out.per_step_counts[-1, 1] == 0
    assert 0.0 < out.cumulative_incidence <= 1.0
