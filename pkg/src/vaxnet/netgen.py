"""Degree-mixing-matrix-targeted network sampling.

A Metropolis-Hastings chain over simple graphs on a fixed node set:
uniform single-pair toggle proposals, stationary density proportional
to exp(-concentration * L1 distance between the graph's degree mixing
matrix and a target). Chains start from an Erdos-Renyi draw at the
target mean degree, and every retained sample comes with convergence
traces of mean degree and DMM distance.

The DMM is maintained incrementally: toggling (u,v) changes only the
degrees of u and v, so the edge itself plus all edges incident to u or
v are re-binned; the L1 distance is then re-summed over the bounded
degree support (the edge count in the denominator changes globally).
Toggling is an involution, so a rejected proposal is undone by applying
the same toggle again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numba as nb
import numpy as np

from vaxnet.graph import Graph, graph_from_indices
from vaxnet.metrics import DegreeMixingMatrix
from vaxnet.rngcore import derive_stream


@dataclass(frozen=True)
class McmcParams:
    """Target matrix, chain length controls, and penalty weight."""

    target: DegreeMixingMatrix
    n_nodes: int
    target_mean_degree: float
    burn_in: int = 100_000
    thinning: int = 1_000
    concentration: float = 80.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 3:
            raise ValueError("n_nodes must be >= 3")
        if self.target_mean_degree * self.n_nodes / 2.0 < 1.0:
            raise ValueError("target mean degree implies fewer than one edge")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.concentration <= 0.0:
            raise ValueError("concentration must be positive")


@dataclass(frozen=True)
class ConvergenceReport:
    """Chain traces recorded once per thinning window."""

    mean_degree_trace: np.ndarray
    dmm_distance_trace: np.ndarray
    accepted_fraction: float


@dataclass(frozen=True)
class ConvergenceTolerances:
    mean_degree_abs: float = 0.5
    dmm_distance: float = 0.15
    window_fraction: float = 0.25


@dataclass(frozen=True)
class ConvergenceCheck:
    passed: bool
    reasons: Tuple[str, ...]
    window_mean_degree: float
    window_dmm_distance: float


def dmm_distance(a: DegreeMixingMatrix, b: DegreeMixingMatrix) -> float:
    """L1 distance over unordered degree pairs; 2 for disjoint supports."""
    keys = set(a.entries) | set(b.entries)
    return float(sum(abs(a.entry(*k) - b.entry(*k)) for k in keys))


@nb.njit(cache=True)
def _dmm_l1(counts, m, target, kmax):
    total = 0.0
    if m == 0:
        for i in range(kmax + 1):
            for j in range(i, kmax + 1):
                total += target[i, j]
        return total
    fm = float(m)
    for i in range(kmax + 1):
        for j in range(i, kmax + 1):
            total += abs(counts[i, j] / fm - target[i, j])
    return total


@nb.njit(cache=True)
def _toggle(adj, deg, deghist, counts, scalars, u, v, cap):
    n = adj.shape[0]
    du = deg[u]
    dv = deg[v]
    if adj[u, v] == 1:
        a = du if du < cap else cap
        b = dv if dv < cap else cap
        if a <= b:
            counts[a, b] -= 1
        else:
            counts[b, a] -= 1
        ua = du - 1 if du - 1 < cap else cap
        for w in range(n):
            if adj[u, w] == 1 and w != v:
                dw = deg[w]
                c = dw if dw < cap else cap
                if a <= c:
                    counts[a, c] -= 1
                else:
                    counts[c, a] -= 1
                if ua <= c:
                    counts[ua, c] += 1
                else:
                    counts[c, ua] += 1
        vb = dv - 1 if dv - 1 < cap else cap
        for w in range(n):
            if adj[v, w] == 1 and w != u:
                dw = deg[w]
                c = dw if dw < cap else cap
                if b <= c:
                    counts[b, c] -= 1
                else:
                    counts[c, b] -= 1
                if vb <= c:
                    counts[vb, c] += 1
                else:
                    counts[c, vb] += 1
        adj[u, v] = 0
        adj[v, u] = 0
        deg[u] = du - 1
        deg[v] = dv - 1
        deghist[du] -= 1
        deghist[du - 1] += 1
        deghist[dv] -= 1
        deghist[dv - 1] += 1
        scalars[0] -= 1
        while scalars[1] > 0 and deghist[scalars[1]] == 0:
            scalars[1] -= 1
    else:
        a = du if du < cap else cap
        b = dv if dv < cap else cap
        ua = du + 1 if du + 1 < cap else cap
        for w in range(n):
            if adj[u, w] == 1:
                dw = deg[w]
                c = dw if dw < cap else cap
                if a <= c:
                    counts[a, c] -= 1
                else:
                    counts[c, a] -= 1
                if ua <= c:
                    counts[ua, c] += 1
                else:
                    counts[c, ua] += 1
        vb = dv + 1 if dv + 1 < cap else cap
        for w in range(n):
            if adj[v, w] == 1:
                dw = deg[w]
                c = dw if dw < cap else cap
                if b <= c:
                    counts[b, c] -= 1
                else:
                    counts[c, b] -= 1
                if vb <= c:
                    counts[vb, c] += 1
                else:
                    counts[c, vb] += 1
        if ua <= vb:
            counts[ua, vb] += 1
        else:
            counts[vb, ua] += 1
        adj[u, v] = 1
        adj[v, u] = 1
        deg[u] = du + 1
        deg[v] = dv + 1
        deghist[du] -= 1
        deghist[du + 1] += 1
        deghist[dv] -= 1
        deghist[dv + 1] += 1
        scalars[0] += 1
        if deg[u] > scalars[1]:
            scalars[1] = deg[u]
        if deg[v] > scalars[1]:
            scalars[1] = deg[v]


@nb.njit(cache=True)
def _step(adj, deg, deghist, counts, scalars, target, conc, tmax, cap, d_cur, rng):
    n = adj.shape[0]
    u = rng.integers(0, n)
    v = rng.integers(0, n - 1)
    if v >= u:
        v += 1
    _toggle(adj, deg, deghist, counts, scalars, u, v, cap)
    kmax = scalars[1] if scalars[1] > tmax else tmax
    if kmax > cap:
        kmax = cap
    d_new = _dmm_l1(counts, scalars[0], target, kmax)
    if d_new <= d_cur or rng.random() < math.exp(-conc * (d_new - d_cur)):
        scalars[2] += 1
        return d_new
    _toggle(adj, deg, deghist, counts, scalars, u, v, cap)
    return d_cur


@nb.njit(cache=True)
def _run(adj, deg, deghist, counts, scalars, target, conc, tmax, cap, d_cur,
         n_steps, rng):
    for _ in range(n_steps):
        d_cur = _step(adj, deg, deghist, counts, scalars, target, conc, tmax,
                      cap, d_cur, rng)
    return d_cur


@nb.njit(cache=True)
def _run_recorded(adj, deg, deghist, counts, scalars, target, conc, tmax, cap,
                  d_cur, n_steps, rng, states):
    n = adj.shape[0]
    for s in range(n_steps):
        d_cur = _step(adj, deg, deghist, counts, scalars, target, conc, tmax,
                      cap, d_cur, rng)
        mask = np.uint64(0)
        bit = 0
        for i in range(n):
            for j in range(i + 1, n):
                if adj[i, j] == 1:
                    mask |= np.uint64(1) << np.uint64(bit)
                bit += 1
        states[s] = mask
    return d_cur


class _ChainState:
    """Mutable chain state shared by sampling and instrumentation."""

    def __init__(self, params: McmcParams):
        if not params.target.entries:
            raise ValueError("target mixing matrix has no edges")
        n = params.n_nodes
        rng = derive_stream(params.rng_seed, ("netgen-chain", 0)).generator
        p = min(1.0, params.target_mean_degree / (n - 1))
        upper = np.triu(rng.random((n, n)) < p, k=1)
        adj = (upper | upper.T).astype(np.uint8)
        deg = adj.sum(axis=1).astype(np.int64)
        tmax = params.target.max_degree
        cap = min(n - 1, max(2 * tmax, tmax + 24, 32))
        rows, cols = np.nonzero(upper)
        a = np.minimum(deg[rows], cap)
        b = np.minimum(deg[cols], cap)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        counts = np.zeros((cap + 1, cap + 1), dtype=np.int64)
        np.add.at(counts, (lo, hi), 1)
        self.params = params
        self.rng = rng
        self.adj = adj
        self.deg = deg
        self.deghist = np.bincount(deg, minlength=n + 1).astype(np.int64)
        self.counts = counts
        self.scalars = np.array(
            [len(rows), int(deg.max()) if n else 0, 0], dtype=np.int64
        )
        self.tmax = min(tmax, cap)
        self.cap = cap
        self.dense_target = params.target.to_dense(cap)
        kmax = max(int(self.scalars[1]), self.tmax)
        self.distance = float(
            _dmm_l1(counts, int(self.scalars[0]), self.dense_target, min(kmax, cap))
        )
        self.steps_done = 0

    def advance(self, n_steps: int) -> None:
        self.distance = float(
            _run(
                self.adj, self.deg, self.deghist, self.counts, self.scalars,
                self.dense_target, self.params.concentration, self.tmax,
                self.cap, self.distance, n_steps, self.rng,
            )
        )
        self.steps_done += n_steps

    def advance_recorded(self, n_steps: int) -> np.ndarray:
        states = np.zeros(n_steps, dtype=np.uint64)
        self.distance = float(
            _run_recorded(
                self.adj, self.deg, self.deghist, self.counts, self.scalars,
                self.dense_target, self.params.concentration, self.tmax,
                self.cap, self.distance, n_steps, self.rng, states,
            )
        )
        self.steps_done += n_steps
        return states

    def mean_degree(self) -> float:
        return 2.0 * float(self.scalars[0]) / self.params.n_nodes

    def accepted_fraction(self) -> float:
        if self.steps_done == 0:
            return 0.0
        return float(self.scalars[2]) / self.steps_done

    def snapshot_graph(self) -> Graph:
        rows, cols = np.nonzero(np.triu(self.adj, k=1))
        pairs = np.stack([rows, cols], axis=1).astype(np.int64)
        return graph_from_indices(self.params.n_nodes, pairs)


def sample_ensemble(
    params: McmcParams, n_samples: int
) -> Tuple[List[Graph], ConvergenceReport]:
    """Burn in, then retain every thinning-th state as a sample graph.

    Traces are recorded once per thinning window across the whole chain
    (burn-in included) so convergence_check sees the full history.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    state = _ChainState(params)
    md_trace = []
    dist_trace = []
    thin = params.thinning
    remaining = params.burn_in
    while remaining > 0:
        chunk = min(thin, remaining)
        state.advance(chunk)
        remaining -= chunk
        md_trace.append(state.mean_degree())
        dist_trace.append(state.distance)
    samples = []
    for _ in range(n_samples):
        state.advance(thin)
        md_trace.append(state.mean_degree())
        dist_trace.append(state.distance)
        samples.append(state.snapshot_graph())
    report = ConvergenceReport(
        mean_degree_trace=np.array(md_trace),
        dmm_distance_trace=np.array(dist_trace),
        accepted_fraction=state.accepted_fraction(),
    )
    return samples, report


def transition_trace(params: McmcParams, n_steps: int) -> np.ndarray:
    """Per-step edge-set bitmasks for exhaustive small-space diagnostics.

    Runs the same chain kernel as sample_ensemble and records the state
    after every step as an upper-triangle bitmask; only meaningful for
    n_nodes <= 11 (64 possible pair bits).
    """
    if params.n_nodes > 11:
        raise ValueError("state recording supports n_nodes <= 11 only")
    state = _ChainState(params)
    return state.advance_recorded(n_steps)


def convergence_check(
    report: ConvergenceReport,
    target_mean_degree: float,
    tolerances: Optional[ConvergenceTolerances] = None,
) -> ConvergenceCheck:
    """Trailing-window test of both traces against the tolerances."""
    tol = tolerances or ConvergenceTolerances()
    md = np.asarray(report.mean_degree_trace, dtype=np.float64)
    dist = np.asarray(report.dmm_distance_trace, dtype=np.float64)
    if len(md) == 0 or len(md) != len(dist):
        raise ValueError("report traces must be non-empty and equal length")
    window = max(1, int(len(md) * tol.window_fraction))
    w_md = float(md[-window:].mean())
    w_dist = float(dist[-window:].mean())
    reasons = []
    if abs(w_md - target_mean_degree) > tol.mean_degree_abs:
        reasons.append(
            f"mean degree {w_md:.3f} off target {target_mean_degree:.3f} "
            f"by more than {tol.mean_degree_abs}"
        )
    if w_dist > tol.dmm_distance:
        reasons.append(
            f"dmm distance {w_dist:.4f} above threshold {tol.dmm_distance}"
        )
    return ConvergenceCheck(
        passed=not reasons,
        reasons=tuple(reasons),
        window_mean_degree=w_md,
        window_dmm_distance=w_dist,
    )
