"""Fixed-choice-design observation of a contact network.

Survey respondents can name at most K contacts. Each undirected tie is
treated as two directed nominations; every node keeps a uniform random
subset of up to K of its out-edges and the observed undirected graph is
the union of kept nominations: edge (i,j) survives if i kept j or j kept
i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vaxnet.graph import Graph, graph_from_indices
from vaxnet.rngcore import derive_stream


@dataclass(frozen=True)
class TruncationParams:
    """Nomination cap and the seed for the per-node keep choices."""

    k: int
    rng_seed: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be unsigned")


def truncate(g: Graph, params: TruncationParams) -> Graph:
    """Observed graph under fixed-choice design with cap K.

    Each node's kept set is the first K entries of a seeded shuffle of
    its neighbor list; the shuffle stream depends only on
    (rng_seed, node index), so the K-observed graph is a subgraph of the
    (K+1)-observed graph under the same seed, and results do not depend
    on iteration order.
    """
    k = params.k
    n = g.n_nodes
    if k == 0 or g.n_edges == 0:
        empty = np.zeros((0, 2), dtype=np.int64)
        return graph_from_indices(n, empty, node_ids=g.node_ids)
    if k >= int(g.degrees.max(initial=0)):
        return g
    src = []
    dst = []
    for i in range(n):
        nbrs = g.neighbor_indices(i)
        d = len(nbrs)
        if d == 0:
            continue
        if d <= k:
            kept = nbrs
        else:
            stream = derive_stream(params.rng_seed, ("fcd-node", i))
            perm = stream.permutation(d)
            kept = nbrs[perm[:k]]
        src.append(np.full(len(kept), i, dtype=np.int64))
        dst.append(kept.astype(np.int64))
    pairs = np.stack([np.concatenate(src), np.concatenate(dst)], axis=1)
    return graph_from_indices(n, pairs, node_ids=g.node_ids)
