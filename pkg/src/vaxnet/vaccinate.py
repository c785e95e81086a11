"""Vaccinee-selection strategies.

Six strategies, ordered roughly by how much network information they
consume: no vaccination, uniform random, random-contact nomination,
degree-cutoff interviewing, top-degree targeting, and top-betweenness
targeting. The two "top" strategies rank nodes on an observed graph
that may be an FCD truncation of the truth; the epidemic itself always
runs on the true graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from vaxnet.graph import Graph
from vaxnet.metrics import betweenness_all

STRATEGY_NONE = "none"
STRATEGY_RANDOM = "random"
STRATEGY_NOMINATION = "nomination"
STRATEGY_HIGH_DEGREE = "high_degree"
STRATEGY_HIGHEST_DEGREE = "highest_degree"
STRATEGY_MOST_CENTRAL = "most_central"

STRATEGIES = (
    STRATEGY_NONE,
    STRATEGY_RANDOM,
    STRATEGY_NOMINATION,
    STRATEGY_HIGH_DEGREE,
    STRATEGY_HIGHEST_DEGREE,
    STRATEGY_MOST_CENTRAL,
)


@dataclass(frozen=True)
class VaccinationPlan:
    """Audit record of one selection: who, how, and at what cost."""

    strategy: str
    selected: Tuple[str, ...]
    target_coverage: float
    achieved_coverage: float
    interviews_conducted: int
    cutoff: Optional[int] = None
    observation_k: Optional[int] = None
    fallback_filled: int = 0

    def selected_indices(self, g: Graph) -> np.ndarray:
        return np.array([g.index_of(v) for v in self.selected], dtype=np.int64)


def _quota(coverage: float, n: int) -> int:
    if not 0.0 < coverage < 1.0:
        raise ValueError("coverage must be in (0, 1)")
    return int(math.floor(coverage * n + 0.5))


def _ids(g: Graph, idx) -> Tuple[str, ...]:
    return tuple(g.node_ids[int(i)] for i in idx)


def select_none(g: Graph) -> VaccinationPlan:
    return VaccinationPlan(
        strategy=STRATEGY_NONE,
        selected=(),
        target_coverage=0.0,
        achieved_coverage=0.0,
        interviews_conducted=0,
    )


def select_random(g: Graph, coverage: float, rng: np.random.Generator) -> VaccinationPlan:
    quota = _quota(coverage, g.n_nodes)
    if quota == 0:
        raise ValueError("coverage rounds to zero vaccinees")
    chosen = rng.choice(g.n_nodes, size=quota, replace=False)
    return VaccinationPlan(
        strategy=STRATEGY_RANDOM,
        selected=_ids(g, chosen),
        target_coverage=coverage,
        achieved_coverage=quota / g.n_nodes,
        interviews_conducted=quota,
    )


def select_nomination(g: Graph, coverage: float, rng: np.random.Generator) -> VaccinationPlan:
    """Each randomly drawn ego nominates one contact for vaccination.

    Egos are drawn without replacement and processed in draw order; an
    ego whose contacts are all selected already (or who has none)
    contributes nothing, so coverage can undershoot the target.
    """
    n = g.n_nodes
    quota = _quota(coverage, n)
    egos = rng.choice(n, size=quota, replace=False)
    picked = np.zeros(n, dtype=bool)
    order = []
    for ego in egos:
        nbrs = g.neighbor_indices(int(ego))
        open_nbrs = nbrs[~picked[nbrs]]
        if len(open_nbrs) == 0:
            continue
        nominee = int(open_nbrs[rng.integers(0, len(open_nbrs))])
        picked[nominee] = True
        order.append(nominee)
    return VaccinationPlan(
        strategy=STRATEGY_NOMINATION,
        selected=_ids(g, order),
        target_coverage=coverage,
        achieved_coverage=len(order) / n,
        interviews_conducted=quota,
    )


def select_high_degree(
    g: Graph, coverage: float, cutoff: int, rng: np.random.Generator
) -> VaccinationPlan:
    """Interview in random order, vaccinating anyone at or above cutoff.

    Interviewing stops as soon as the quota is met. If every node gets
    interviewed and the quota is still open, the remainder is drawn
    uniformly from the non-qualifying interviewees and the fill count is
    recorded on the plan.
    """
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    n = g.n_nodes
    quota = _quota(coverage, n)
    order = rng.permutation(n)
    deg = g.degrees
    chosen = []
    nonqual = []
    interviews = 0
    for node in order:
        if len(chosen) >= quota:
            break
        interviews += 1
        if deg[node] >= cutoff:
            chosen.append(int(node))
        else:
            nonqual.append(int(node))
    fallback = 0
    if len(chosen) < quota and nonqual:
        need = min(quota - len(chosen), len(nonqual))
        fill = rng.choice(len(nonqual), size=need, replace=False)
        chosen.extend(nonqual[int(i)] for i in fill)
        fallback = need
    return VaccinationPlan(
        strategy=STRATEGY_HIGH_DEGREE,
        selected=_ids(g, chosen),
        target_coverage=coverage,
        achieved_coverage=len(chosen) / n,
        interviews_conducted=interviews,
        cutoff=cutoff,
        fallback_filled=fallback,
    )


def _select_top(
    g_observed: Graph,
    coverage: float,
    scores: np.ndarray,
    rng: np.random.Generator,
    strategy: str,
    observation_k: Optional[int],
) -> VaccinationPlan:
    n = g_observed.n_nodes
    quota = _quota(coverage, n)
    if quota == 0:
        chosen = np.zeros(0, dtype=np.int64)
    else:
        desc = np.sort(scores)[::-1]
        boundary = desc[quota - 1]
        above = np.flatnonzero(scores > boundary)
        tied = np.flatnonzero(scores == boundary)
        need = quota - len(above)
        take = tied if need >= len(tied) else rng.choice(tied, size=need, replace=False)
        chosen = np.concatenate([above, np.sort(take)])
    return VaccinationPlan(
        strategy=strategy,
        selected=_ids(g_observed, chosen),
        target_coverage=coverage,
        achieved_coverage=len(chosen) / n,
        interviews_conducted=0,
        observation_k=observation_k,
    )


def select_top_by_degree(
    g_observed: Graph,
    coverage: float,
    rng: np.random.Generator,
    observation_k: Optional[int] = None,
) -> VaccinationPlan:
    """Vaccinate the quota of highest-degree nodes in the observed graph."""
    return _select_top(
        g_observed,
        coverage,
        g_observed.degrees.astype(np.float64),
        rng,
        STRATEGY_HIGHEST_DEGREE,
        observation_k,
    )


def select_top_by_betweenness(
    g_observed: Graph,
    coverage: float,
    rng: np.random.Generator,
    observation_k: Optional[int] = None,
) -> VaccinationPlan:
    """Vaccinate the quota of highest-betweenness nodes in the observed graph."""
    return _select_top(
        g_observed,
        coverage,
        betweenness_all(g_observed),
        rng,
        STRATEGY_MOST_CENTRAL,
        observation_k,
    )
