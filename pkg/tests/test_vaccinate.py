"""Selection strategies: quotas, ordering, tie handling, nomination."""

import math

import numpy as np
import pytest

from vaxnet.graph import graph_from_indices
from vaxnet.metrics import betweenness_all
from vaxnet.rngcore import derive_stream
from vaxnet.vaccinate import (
    STRATEGIES,
    select_high_degree,
    select_nomination,
    select_none,
    select_random,
    select_top_by_betweenness,
    select_top_by_degree,
)


def random_graph(n, p, rng):
    upper = np.triu(rng.random((n, n)) < p, k=1)
    a, b = np.nonzero(upper)
    return graph_from_indices(n, np.column_stack([a, b]))


def rng_for(tag, i=0):
    return derive_stream(2024, (tag, i)).generator


def test_strategy_registry():
    assert len(STRATEGIES) == 6
    assert len(set(STRATEGIES)) == 6


def test_select_none_is_empty():
    g = random_graph(30, 0.2, rng_for("none"))
    plan = select_none(g)
    assert plan.selected == ()
    assert plan.achieved_coverage == 0.0
    assert plan.selected_indices(g).size == 0


def test_random_quota_rounds_to_nearest_and_is_unique():
    g = random_graph(101, 0.05, rng_for("rand"))
    plan = select_random(g, 0.1, rng_for("rand", 1))
    # campaign quotas round half up: 10.1 people means 10 vaccinees
    assert len(plan.selected) == 10
    assert len(set(plan.selected)) == len(plan.selected)
    idx = plan.selected_indices(g)
    assert idx.min() >= 0 and idx.max() < 101
    g30 = random_graph(30, 0.1, rng_for("rand", 3))
    assert len(select_random(g30, 0.05, rng_for("rand", 4)).selected) == 2
    with pytest.raises(ValueError):
        select_random(g, 0.0001, rng_for("rand", 2))


def test_nomination_picks_neighbors_only():
    g = random_graph(80, 0.08, rng_for("nom"))
    plan = select_nomination(g, 0.15, rng_for("nom", 1))
    adj = {i: set(g.neighbor_indices(i).tolist()) for i in range(80)}
    for node in plan.selected_indices(g):
        assert any(int(node) in adj[i] for i in range(80))
    assert plan.interviews_conducted == math.ceil(0.15 * 80)
    assert plan.achieved_coverage <= 0.15 + 1 / 80


def test_nomination_favors_high_degree():
    # friendship paradox: contacts of random egos run above-average degree
    rng = np.random.default_rng(12)
    g = random_graph(300, 0.03, rng)
    deg = g.degrees
    nominee_degs = []
    for rep in range(60):
        plan = select_nomination(g, 0.1, rng_for("fp", rep))
        nominee_degs += deg[plan.selected_indices(g)].tolist()
    assert np.mean(nominee_degs) > deg.mean() + 0.5


def test_nomination_undershoots_without_open_contacts():
    # an isolated-pairs graph: every ego has one contact, duplicates blocked
    pairs = np.arange(40).reshape(20, 2)
    g = graph_from_indices(40, pairs)
    plan = select_nomination(g, 0.5, rng_for("pairs"))
    # 20 egos nominate, but a pair can only ever contribute one vaccinee
    assert len(plan.selected) <= 20
    assert plan.achieved_coverage <= 0.5


def test_high_degree_cutoff_and_interview_stop():
    rng = np.random.default_rng(3)
    g = random_graph(200, 0.06, rng)
    cutoff = int(np.median(g.degrees))
    plan = select_high_degree(g, 0.1, cutoff, rng_for("hd"))
    quota = math.ceil(0.1 * 200)
    assert len(plan.selected) == quota
    assert plan.cutoff == cutoff
    deg = g.degrees
    assert all(deg[i] >= cutoff for i in plan.selected_indices(g))
    # roughly half the population qualifies, so the interviewer should
    # stop well short of a full census
    assert plan.interviews_conducted < 200
    assert plan.fallback_filled == 0


def test_high_degree_fallback_fills_from_interviewees():
    g = random_graph(50, 0.1, rng_for("fb"))
    plan = select_high_degree(g, 0.2, cutoff=10**6, rng=rng_for("fb", 1))
    quota = math.ceil(0.2 * 50)
    assert plan.fallback_filled == quota
    assert len(plan.selected) == quota
    assert plan.interviews_conducted == 50


def test_top_by_degree_takes_the_top():
    # distinct degrees: 4,3,2,1,... so the top two are unambiguous
    g = graph_from_indices(5, np.array(
        [[0, 1], [0, 2], [0, 3], [0, 4], [1, 2], [1, 3], [2, 3]]
    ))
    plan = select_top_by_degree(g, 0.4, rng_for("top"))
    chosen = set(plan.selected_indices(g).tolist())
    deg = g.degrees
    worst_chosen = min(deg[i] for i in chosen)
    best_left = max(deg[i] for i in range(5) if i not in chosen)
    assert worst_chosen >= best_left
    assert plan.strategy == "highest_degree"


def test_top_by_degree_randomizes_boundary_ties():
    # hub plus six degree-1 leaves, quota 2: hub always in, the second
    # slot rotates among the leaves
    g = graph_from_indices(7, np.array([[0, i] for i in range(1, 7)]))
    seen = set()
    for rep in range(80):
        plan = select_top_by_degree(g, 0.25, rng_for("tie", rep))
        chosen = plan.selected_indices(g)
        assert 0 in chosen.tolist()
        seen.update(int(i) for i in chosen if i != 0)
    assert len(seen) >= 4


def test_top_by_betweenness_prefers_bridges():
    # two cliques joined through one cut vertex
    left = [[i, j] for i in range(4) for j in range(i + 1, 4)]
    right = [[i, j] for i in range(5, 9) for j in range(i + 1, 9)]
    bridge = [[3, 4], [4, 5]]
    g = graph_from_indices(9, np.array(left + right + bridge))
    bc = betweenness_all(g)
    assert bc[4] == bc.max()
    plan = select_top_by_betweenness(g, 0.12, rng_for("bc"))
    assert plan.selected_indices(g).tolist() == [4]
    assert plan.strategy == "most_central"


def test_observation_k_is_recorded():
    g = random_graph(30, 0.2, rng_for("obs"))
    plan = select_top_by_degree(g, 0.1, rng_for("obs", 1), observation_k=3)
    assert plan.observation_k == 3
    plan2 = select_top_by_degree(g, 0.1, rng_for("obs", 2))
    assert plan2.observation_k is None


def test_selected_are_node_ids():
    g = graph_from_indices(4, np.array([[0, 1], [0, 2], [0, 3]]),
                           node_ids=("w", "x", "y", "z"))
    plan = select_top_by_degree(g, 0.25, rng_for("ids"))
    assert plan.selected == ("w",)
    assert plan.selected_indices(g).tolist() == [0]
