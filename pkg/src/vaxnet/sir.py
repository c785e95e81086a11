"""Discrete-time SIR epidemic engine with unit infectivity.

Each step has two synchronous phases. First, every node infectious at
the start of the step directs a single attack at one neighbor chosen
uniformly from its full contact list; the attack infects with
probability beta only if the target is currently susceptible, and is
otherwise wasted (already-infected, recovered, and vaccinated contacts
still absorb attacks). Second, every node infectious at the start of
the step recovers with probability gamma. Nodes infected this step
start attacking next step.

Vaccinated nodes cannot be seeded or infected and never transmit, but
they stay in the population: they count in the incidence denominator
and continue to soak up attacks directed at them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numba as nb
import numpy as np

from vaxnet.graph import Graph
from vaxnet.rngcore import derive_stream

S, I, R, V = 0, 1, 2, 3

_STEP_CAP = 1_000_000


@dataclass(frozen=True)
class SirParams:
    """Per-step transmission/recovery probabilities and seeding."""

    beta: float
    gamma: float
    seed_fraction: float
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if not 0.0 < self.seed_fraction <= 1.0:
            raise ValueError("seed_fraction must be in (0, 1]")


@dataclass(frozen=True)
class SirOutcome:
    """Summary of one epidemic run."""

    cumulative_incidence: float
    n_seeds: int
    seed_caused_infections: int
    duration_steps: int
    per_step_counts: Optional[np.ndarray] = None


@nb.njit(cache=True)
def _sir_steps(indptr, indices, status, is_seed, cur, n_cur, beta, gamma,
               record, counts, rng):
    n = status.shape[0]
    nxt = np.empty(n, dtype=np.int64)
    seed_caused = 0
    infections = 0
    steps = 0
    n_s = 0
    for i in range(n):
        if status[i] == S:
            n_s += 1
    n_i = n_cur
    n_r = 0
    if record:
        counts[0, 0] = n_s
        counts[0, 1] = n_i
        counts[0, 2] = n_r
    while n_cur > 0 and steps < _STEP_CAP:
        n_new = 0
        for idx in range(n_cur):
            u = cur[idx]
            lo = indptr[u]
            d = indptr[u + 1] - lo
            if d == 0:
                continue
            v = indices[lo + rng.integers(0, d)]
            if status[v] == S and rng.random() < beta:
                status[v] = I
                nxt[n_new] = v
                n_new += 1
                infections += 1
                if is_seed[u] == 1:
                    seed_caused += 1
        n_keep = 0
        for idx in range(n_cur):
            u = cur[idx]
            if rng.random() < gamma:
                status[u] = R
                n_r += 1
            else:
                cur[n_keep] = u
                n_keep += 1
        for idx in range(n_new):
            cur[n_keep + idx] = nxt[idx]
        n_s -= n_new
        n_i = n_keep + n_new
        n_cur = n_i
        steps += 1
        if record and steps < counts.shape[0]:
            counts[steps, 0] = n_s
            counts[steps, 1] = n_i
            counts[steps, 2] = n_r
    return infections, seed_caused, steps


def run_sir(
    g: Graph,
    params: SirParams,
    vaccinated: Sequence[str] = (),
    rng: Optional[np.random.Generator] = None,
    record_steps: bool = False,
) -> SirOutcome:
    """Run one epidemic on g with the given vaccinated node ids.

    Seeds ceil(seed_fraction * n_nodes) initial infections uniformly
    from the unvaccinated nodes, then iterates steps until no node is
    infectious. When rng is omitted a fresh stream is derived from
    params.rng_seed, so identical inputs reproduce the outcome exactly.
    """
    n = g.n_nodes
    if n == 0:
        raise ValueError("cannot run an epidemic on an empty graph")
    status = np.zeros(n, dtype=np.int8)
    for node in vaccinated:
        if isinstance(node, str):
            try:
                idx = g.index_of(node)
            except KeyError:
                raise ValueError(f"vaccinated node not in graph: {node}")
        else:
            idx = int(node)
        if not 0 <= idx < n:
            raise ValueError(f"vaccinated node out of range: {node}")
        status[idx] = V
    n_seeds = math.ceil(params.seed_fraction * n)
    if n_seeds < 1:
        raise ValueError("seed count rounded to zero")
    unvax = np.flatnonzero(status == S)
    if n_seeds > len(unvax):
        raise ValueError(
            f"need {n_seeds} seeds but only {len(unvax)} unvaccinated nodes"
        )
    if rng is None:
        rng = derive_stream(params.rng_seed).generator
    seeds = rng.choice(unvax, size=n_seeds, replace=False)
    is_seed = np.zeros(n, dtype=np.int8)
    is_seed[seeds] = 1
    status[seeds] = I
    cur = np.empty(n, dtype=np.int64)
    cur[:n_seeds] = np.sort(seeds)
    counts = (
        np.zeros((_step_buffer_rows(n, params.gamma), 3), dtype=np.int64)
        if record_steps
        else np.zeros((1, 3), dtype=np.int64)
    )
    infections, seed_caused, steps = _sir_steps(
        g.indptr,
        g.indices,
        status,
        is_seed,
        cur,
        n_seeds,
        params.beta,
        params.gamma,
        record_steps,
        counts,
        rng,
    )
    per_step = None
    if record_steps:
        per_step = counts[: min(steps + 1, counts.shape[0])].copy()
    ever = n_seeds + infections
    return SirOutcome(
        cumulative_incidence=ever / n,
        n_seeds=n_seeds,
        seed_caused_infections=seed_caused,
        duration_steps=steps,
        per_step_counts=per_step,
    )


def _step_buffer_rows(n: int, gamma: float) -> int:
    """Buffer size covering initial state plus a generous duration bound."""
    if gamma <= 0.0:
        return _STEP_CAP + 1
    expected_tail = int(40.0 / gamma)
    return n + expected_tail + 2


def estimate_r0(outcomes: Sequence[SirOutcome]) -> float:
    """Mean over runs of seed-caused infections per seed."""
    if len(outcomes) == 0:
        raise ValueError("estimate_r0 needs at least one outcome")
    ratios = []
    for o in outcomes:
        if o.n_seeds < 1:
            raise ValueError("outcome with zero seeds")
        ratios.append(o.seed_caused_infections / o.n_seeds)
    return float(np.mean(ratios))
