"""Undirected simple graphs and multiplex edge-list ingestion.

A village network arrives as a text edge list where each tie carries a
multiplexity: how many of the 12 surveyed interaction types were reported
on it. Thresholding on multiplexity turns the multiplex records into the
simple undirected graph the epidemic runs on.

Node identifiers are opaque strings. Internally they map to dense integer
indices in first-appearance order; all array-level computation (degrees,
adjacency walks, kernels) uses the dense indices, and the mapping is part
of the Graph so outputs can always be reported in the original ids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EdgeListParseError(ValueError):
    """Raised for malformed edge-list input; message carries the line number."""


@dataclass(frozen=True)
class MultiplexEdgeList:
    """Parsed tie records: unordered node pairs with merged multiplexity.

    Duplicate pairs are merged by taking the maximum multiplexity seen.
    ``node_order`` preserves first appearance so graph construction is
    deterministic.
    """

    ties: dict  # (node_a, node_b) sorted pair -> multiplexity in 1..12
    node_order: tuple  # node ids in order of first appearance

    def __len__(self):
        return len(self.ties)


def parse_edge_list(path) -> MultiplexEdgeList:
    """Read a whitespace-separated edge list.

    Lines hold ``node_a node_b [multiplexity]``; a missing multiplexity
    means 12 so plain 2-column lists pass any threshold. '#' lines are
    comments. Malformed lines, self-loops, and multiplexities outside
    1..12 raise EdgeListParseError naming the line.
    """
    ties = {}
    order = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) not in (2, 3):
                raise EdgeListParseError(
                    f"line {lineno}: expected 2 or 3 fields, got {len(fields)}"
                )
            a, b = fields[0], fields[1]
            if a == b:
                raise EdgeListParseError(f"line {lineno}: self-loop on node {a!r}")
            if len(fields) == 3:
                try:
                    mult = int(fields[2])
                except ValueError:
                    raise EdgeListParseError(
                        f"line {lineno}: multiplexity {fields[2]!r} is not an integer"
                    ) from None
                if not 1 <= mult <= 12:
                    raise EdgeListParseError(
                        f"line {lineno}: multiplexity {mult} outside 1..12"
                    )
            else:
                mult = 12
            for node in (a, b):
                if node not in seen:
                    seen.add(node)
                    order.append(node)
            pair = (a, b) if a < b else (b, a)
            prev = ties.get(pair)
            if prev is None or mult > prev:
                ties[pair] = mult
    return MultiplexEdgeList(ties=ties, node_order=tuple(order))


def multiplexity_histogram(edges: MultiplexEdgeList) -> dict:
    """Counts of distinct ties at each multiplexity level 1..12."""
    hist = {level: 0 for level in range(1, 13)}
    for mult in edges.ties.values():
        hist[mult] += 1
    return hist


class Graph:
    """Immutable undirected simple graph in CSR form.

    ``indptr``/``indices`` give each node's sorted neighbor indices;
    ``degrees`` is the per-node degree. Neighbor queries by id go through
    the id mapping. Construction validates symmetry by building from an
    explicit undirected edge array.
    """

    __slots__ = ("node_ids", "_index", "n_nodes", "n_edges", "indptr", "indices", "degrees")

    def __init__(self, node_ids, edge_array: np.ndarray):
        self.node_ids = tuple(str(x) for x in node_ids)
        self._index = {nid: i for i, nid in enumerate(self.node_ids)}
        if len(self._index) != len(self.node_ids):
            raise ValueError("duplicate node ids")
        n = len(self.node_ids)
        self.n_nodes = n
        edges = np.asarray(edge_array, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint outside node range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loop in edge array")
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            canon = np.unique(np.stack([lo, hi], axis=1), axis=0)
        else:
            canon = edges.reshape(0, 2)
        m = len(canon)
        self.n_edges = m
        deg = np.zeros(n, dtype=np.int64)
        if m:
            np.add.at(deg, canon[:, 0], 1)
            np.add.at(deg, canon[:, 1], 1)
        self.degrees = deg
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        if m:
            both = np.concatenate([canon, canon[:, ::-1]])
            order = np.lexsort((both[:, 1], both[:, 0]))
            indices = both[order, 1].astype(np.int32)
        else:
            indices = np.empty(0, dtype=np.int32)
        self.indptr = indptr
        self.indices = indices

    # -- id mapping -------------------------------------------------------

    def index_of(self, node_id) -> int:
        return self._index[str(node_id)]

    def id_of(self, index: int):
        return self.node_ids[index]

    def neighbors(self, node_id) -> tuple:
        i = self.index_of(node_id)
        s, e = self.indptr[i], self.indptr[i + 1]
        return tuple(self.node_ids[j] for j in self.indices[s:e])

    def neighbor_indices(self, index: int) -> np.ndarray:
        return self.indices[self.indptr[index]:self.indptr[index + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        row = self.neighbor_indices(i)
        pos = np.searchsorted(row, j)
        return pos < len(row) and row[pos] == j

    def edge_index_array(self) -> np.ndarray:
        """Undirected edges as an (m, 2) index array with i < j."""
        rows = np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degrees)
        cols = self.indices.astype(np.int64)
        mask = rows < cols
        return np.stack([rows[mask], cols[mask]], axis=1)

    def subgraph_without(self, removed: np.ndarray) -> "Graph":
        """Graph on the same node set with ``removed`` nodes' edges deleted."""
        keep = np.ones(self.n_nodes, dtype=bool)
        keep[removed] = False
        edges = self.edge_index_array()
        if edges.size:
            mask = keep[edges[:, 0]] & keep[edges[:, 1]]
            edges = edges[mask]
        return Graph(self.node_ids, edges)

    def __repr__(self):
        return f"Graph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def build_graph(edges: MultiplexEdgeList, min_multiplexity: int) -> Graph:
    """Threshold multiplex ties into a simple graph.

    An edge survives iff its merged multiplexity is at least
    ``min_multiplexity``. Nodes named anywhere in the records are retained
    even if all their ties fall below threshold.
    """
    if not 1 <= int(min_multiplexity) <= 12:
        raise ValueError("min_multiplexity must be in 1..12")
    index = {nid: i for i, nid in enumerate(edges.node_order)}
    kept = [
        (index[a], index[b])
        for (a, b), mult in edges.ties.items()
        if mult >= min_multiplexity
    ]
    arr = np.array(kept, dtype=np.int64) if kept else np.empty((0, 2), dtype=np.int64)
    return Graph(edges.node_order, arr)


def graph_from_indices(n_nodes: int, edge_array, node_ids=None) -> Graph:
    """Build a Graph from integer endpoints, defaulting ids to "0".."n-1"."""
    if node_ids is None:
        node_ids = [str(i) for i in range(n_nodes)]
    if len(node_ids) != n_nodes:
        raise ValueError("node_ids length mismatch")
    return Graph(node_ids, np.asarray(edge_array, dtype=np.int64))


def write_edge_list(g: Graph, path) -> None:
    """Write the graph as a 2-column edge list plus isolated-node comments.

    Degree-0 nodes are recorded as '#isolated <id>' lines so a round-trip
    through parse_edge_list + build_graph reconstructs the full node set.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(g.n_nodes):
            for j in g.neighbor_indices(i):
                if i < int(j):
                    fh.write(f"{g.node_ids[i]} {g.node_ids[j]}\n")
        for i in range(g.n_nodes):
            if g.degrees[i] == 0:
                fh.write(f"#isolated {g.node_ids[i]}\n")


def read_graph(path, min_multiplexity: int = 1) -> Graph:
    """Parse an edge list and build the thresholded graph in one step.

    '#isolated <id>' comment lines emitted by write_edge_list are folded
    back in as degree-0 nodes.
    """
    edges = parse_edge_list(path)
    isolated = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line.startswith("#isolated "):
                isolated.append(line.split(None, 1)[1])
    g = build_graph(edges, min_multiplexity)
    extra = [nid for nid in isolated if nid not in set(g.node_ids)]
    if extra:
        ids = list(g.node_ids) + extra
        g = Graph(ids, g.edge_index_array())
    return g


def connected_component_labels(g: Graph) -> np.ndarray:
    """Label each node with a component id (stable: lowest member index)."""
    n = g.n_nodes
    labels = np.full(n, -1, dtype=np.int64)
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = start
        stack = [start]
        while stack:
            u = stack.pop()
            for v in g.neighbor_indices(u):
                v = int(v)
                if labels[v] < 0:
                    labels[v] = start
                    stack.append(v)
    return labels


def largest_component_fraction(g: Graph) -> float:
    """Share of nodes in the largest connected component; 0 for empty graph."""
    if g.n_nodes == 0:
        return 0.0
    labels = connected_component_labels(g)
    _, counts = np.unique(labels, return_counts=True)
    return float(counts.max()) / g.n_nodes
