"""Village-level network characteristics.

Covers the descriptive battery reported per village: degree statistics,
density, degree assortativity, betweenness centrality, largest-component
fraction, the degree mixing matrix, and cross-village correlations of the
characteristics.

Assortativity and correlations can be undefined (zero variance); those
return None / NaN rather than a silent 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba as nb
import numpy as np

from vaxnet.graph import Graph, largest_component_fraction


def degree_stats(g: Graph):
    """Population mean, SD, and median of the degree sequence."""
    if g.n_nodes == 0:
        raise ValueError("degree_stats undefined on empty graph")
    deg = g.degrees.astype(np.float64)
    return float(deg.mean()), float(deg.std()), float(np.median(deg))


def density(g: Graph) -> float:
    if g.n_nodes < 2:
        raise ValueError("density undefined for fewer than 2 nodes")
    return 2.0 * g.n_edges / (g.n_nodes * (g.n_nodes - 1))


def _stub_degree_pairs(g: Graph):
    """Endpoint degrees over directed stubs: each edge in both orientations."""
    deg = g.degrees
    rows = np.repeat(np.arange(g.n_nodes), deg)
    x = deg[rows].astype(np.float64)
    y = deg[g.indices].astype(np.float64)
    return x, y


def assortativity(g: Graph) -> Optional[float]:
    """Pearson correlation of endpoint degrees over directed edge stubs.

    Returns None when the endpoint-degree variance is zero (regular
    graphs), raises on an edgeless graph.
    """
    if g.n_edges == 0:
        raise ValueError("assortativity undefined on edgeless graph")
    x, y = _stub_degree_pairs(g)
    vx = x.var()
    vy = y.var()
    if vx == 0.0 or vy == 0.0:
        return None
    cov = ((x - x.mean()) * (y - y.mean())).mean()
    return float(cov / np.sqrt(vx * vy))


@nb.njit(cache=True)
def _brandes(indptr, indices, n):
    bc = np.zeros(n, dtype=np.float64)
    dist = np.empty(n, dtype=np.int64)
    sigma = np.empty(n, dtype=np.float64)
    delta = np.empty(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        for i in range(n):
            dist[i] = -1
            sigma[i] = 0.0
            delta[i] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        head = 0
        tail = 0
        queue[tail] = s
        tail += 1
        count = 0
        while head < tail:
            v = queue[head]
            head += 1
            order[count] = v
            count += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        for idx in range(count - 1, 0, -1):
            w = order[idx]
            coeff = (1.0 + delta[w]) / sigma[w]
            for k in range(indptr[w], indptr[w + 1]):
                v = indices[k]
                if dist[v] == dist[w] - 1:
                    delta[v] += sigma[v] * coeff
            if w != s:
                bc[w] += delta[w]
    return bc * 0.5


def betweenness_all(g: Graph) -> np.ndarray:
    """Betweenness over unordered node pairs, endpoints excluded.

    One BFS per source with the usual dependency accumulation; the
    ordered-pair total is halved for the undirected count. Scores are raw
    (unnormalized); see village_characteristics for the normalized mean.
    """
    if g.n_nodes == 0:
        return np.zeros(0, dtype=np.float64)
    return _brandes(g.indptr, g.indices.astype(np.int64), g.n_nodes)


@dataclass(frozen=True)
class DegreeMixingMatrix:
    """Fraction of edges joining each unordered degree pair.

    ``entries`` maps a canonical (low_degree, high_degree) key to the
    fraction of all edges joining endpoints of those degrees; fractions
    sum to 1 with the diagonal counted once.
    """

    entries: dict
    max_degree: int

    def entry(self, a: int, b: int) -> float:
        key = (a, b) if a <= b else (b, a)
        return self.entries.get(key, 0.0)

    def to_dense(self, size: Optional[int] = None) -> np.ndarray:
        """Symmetric dense matrix with entry(a,b) at [a,b] and [b,a]."""
        k = self.max_degree if size is None else size
        out = np.zeros((k + 1, k + 1), dtype=np.float64)
        for (a, b), frac in self.entries.items():
            if a > k or b > k:
                raise ValueError("dense size smaller than max stored degree")
            out[a, b] = frac
            out[b, a] = frac
        return out


def degree_mixing_matrix(g: Graph) -> DegreeMixingMatrix:
    if g.n_edges == 0:
        raise ValueError("degree mixing matrix undefined on edgeless graph")
    deg = g.degrees
    edges = g.edge_index_array()
    da = deg[edges[:, 0]]
    db = deg[edges[:, 1]]
    lo = np.minimum(da, db)
    hi = np.maximum(da, db)
    entries = {}
    m = g.n_edges
    for a, b in zip(lo.tolist(), hi.tolist()):
        key = (a, b)
        entries[key] = entries.get(key, 0.0) + 1.0 / m
    return DegreeMixingMatrix(entries=entries, max_degree=int(deg.max()))


@dataclass(frozen=True)
class VillageCharacteristics:
    """The per-village descriptive battery (Table-1-style rows)."""

    n_nodes: int
    mean_degree: float
    sd_degree: float
    median_degree: float
    density: float
    assortativity: Optional[float]
    mean_betweenness: float
    lcc_fraction: float

    def as_array(self) -> np.ndarray:
        """All eight values, None mapped to NaN, in canonical order."""
        a = np.nan if self.assortativity is None else self.assortativity
        return np.array(
            [
                float(self.n_nodes),
                self.mean_degree,
                self.sd_degree,
                self.median_degree,
                self.density,
                a,
                self.mean_betweenness,
                self.lcc_fraction,
            ]
        )


CHARACTERISTIC_NAMES = (
    "n_nodes",
    "mean_degree",
    "sd_degree",
    "median_degree",
    "density",
    "assortativity",
    "mean_betweenness",
    "lcc_fraction",
)

# The seven regression predictors: every characteristic except raw size.
PREDICTOR_NAMES = CHARACTERISTIC_NAMES[1:]


def village_characteristics(g: Graph) -> VillageCharacteristics:
    if g.n_nodes < 2 or g.n_edges < 1:
        raise ValueError("village characteristics need >= 2 nodes and >= 1 edge")
    mean_d, sd_d, med_d = degree_stats(g)
    n = g.n_nodes
    bc = betweenness_all(g)
    # normalize by the pair count so means are comparable across sizes
    norm = (n - 1) * (n - 2) / 2.0
    mean_bc = float(bc.mean() / norm) if norm > 0 else 0.0
    return VillageCharacteristics(
        n_nodes=n,
        mean_degree=mean_d,
        sd_degree=sd_d,
        median_degree=med_d,
        density=density(g),
        assortativity=assortativity(g),
        mean_betweenness=mean_bc,
        lcc_fraction=largest_component_fraction(g),
    )


def predictor_values(g: Graph, indices) -> np.ndarray:
    """Selected predictors (PREDICTOR_NAMES positions), undefined -> NaN.

    Betweenness is only computed when position 5 is requested, so degree-only
    requests stay cheap on large batches of graphs.
    """
    indices = tuple(indices)
    out = np.empty(len(indices))
    stats = degree_stats(g) if any(i in (0, 1, 2) for i in indices) else None
    for slot, i in enumerate(indices):
        if i in (0, 1, 2):
            out[slot] = stats[i]
        elif i == 3:
            out[slot] = density(g)
        elif i == 4:
            a = assortativity(g)
            out[slot] = np.nan if a is None else a
        elif i == 5:
            norm = (g.n_nodes - 1) * (g.n_nodes - 2) / 2.0
            bc = betweenness_all(g)
            out[slot] = float(bc.mean() / norm) if norm > 0 else 0.0
        elif i == 6:
            out[slot] = largest_component_fraction(g)
        else:
            raise ValueError(f"no predictor at position {i}")
    return out


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties given their average rank."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def rank_correlation(x, y) -> Optional[float]:
    """Spearman correlation: Pearson on average-rank vectors.

    Returns None when either input is constant.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("rank_correlation needs two equal-length vectors, n >= 2")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    if rx.var() == 0.0 or ry.var() == 0.0:
        return None
    cov = ((rx - rx.mean()) * (ry - ry.mean())).mean()
    return float(cov / np.sqrt(rx.var() * ry.var()))


def characteristic_correlations(rows) -> np.ndarray:
    """Pairwise Pearson correlations of the characteristics across villages.

    Input is a sequence of VillageCharacteristics; output is an 8x8 matrix
    in CHARACTERISTIC_NAMES order with NaN where a column is constant or
    has missing (undefined assortativity) values.
    """
    if len(rows) < 2:
        raise ValueError("need at least 2 villages")
    data = np.stack([r.as_array() for r in rows])
    k = data.shape[1]
    out = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            xi = data[:, i]
            yj = data[:, j]
            ok = ~(np.isnan(xi) | np.isnan(yj))
            if ok.sum() < 2:
                continue
            x = xi[ok]
            y = yj[ok]
            if x.var() == 0.0 or y.var() == 0.0:
                continue
            cov = ((x - x.mean()) * (y - y.mean())).mean()
            out[i, j] = out[j, i] = cov / np.sqrt(x.var() * y.var())
    return out
