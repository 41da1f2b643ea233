"""Graph container, edge-list and CSV I/O, SBM generation, Laplacians and
perturbation kernels."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ._rng import generator
from .errors import (
    DirectedGraphError,
    EmptyGraphError,
    IsolatedNodeError,
    NetEmbedError,
    ParseError,
    SelfLoopError,
)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable CSR adjacency.

    Undirected graphs store every edge in both directions with equal weight.
    Neighbour lists are sorted by node id.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    directed: bool = False

    def __post_init__(self):
        for name in ("indptr", "indices", "weights"):
            getattr(self, name).setflags(write=False)

    @classmethod
    def from_edges(cls, n, src, dst, weights=None, directed=False) -> "Graph":
        """Build a graph from edge arrays.

        Duplicate edges are merged by summing their weights; undirected input
        is symmetrised (``(i, j)`` and ``(j, i)`` count as the same edge).
        """
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise NetEmbedError("src and dst must have the same length")
        if weights is None:
            weights = np.ones(len(src))
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if weights.shape != src.shape:
            raise NetEmbedError("weights must match the number of edges")
        if n < 0:
            raise NetEmbedError("node count must be non-negative")
        if len(src) and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= n):
            raise NetEmbedError("edge endpoint out of range")
        if np.any(src == dst):
            raise NetEmbedError(f"self-loop at node {int(src[src == dst][0])}")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise NetEmbedError("edge weights must be finite and positive")
        if not directed:
            src, dst = np.minimum(src, dst), np.maximum(src, dst)
        mat = sp.coo_matrix((weights, (src, dst)), shape=(n, n)).tocsr()
        mat.sum_duplicates()
        if not directed:
            mat = (mat + mat.T).tocsr()
        mat.sort_indices()
        return cls(
            n=int(n),
            indptr=mat.indptr.astype(np.int64),
            indices=mat.indices.astype(np.int64),
            weights=mat.data.astype(np.float64),
            directed=bool(directed),
        )

    @classmethod
    def empty(cls, n, directed=False) -> "Graph":
        return cls.from_edges(n, [], [], directed=directed)

    @property
    def num_arcs(self) -> int:
        """Stored adjacency entries (twice the edge count when undirected)."""
        return int(self.indptr[-1])

    @property
    def num_edges(self) -> int:
        return self.num_arcs if self.directed else self.num_arcs // 2

    @property
    def is_weighted(self) -> bool:
        return bool(np.any(self.weights != 1.0))

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def strength(self) -> np.ndarray:
        """Weighted out-degree, sum_k W_ik."""
        src = np.repeat(np.arange(self.n), self.out_degree())
        return np.bincount(src, weights=self.weights, minlength=self.n)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def neighbor_weights(self, v: int) -> np.ndarray:
        return self.weights[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        pos = np.searchsorted(nb, v)
        return bool(pos < len(nb) and nb[pos] == v)

    def arcs(self):
        """All stored (src, dst, weight) entries in CSR order."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree())
        return src, self.indices.copy(), self.weights.copy()

    def edges(self):
        """Unique edges: arcs for directed graphs, ``i < j`` pairs otherwise."""
        src, dst, w = self.arcs()
        if not self.directed:
            keep = src < dst
            src, dst, w = src[keep], dst[keep], w[keep]
        return src, dst, w

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.weights.copy(), self.indices.copy(), self.indptr.copy()), shape=(self.n, self.n)
        )

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def subgraph(self, nodes) -> "Graph":
        """Induced subgraph; node ``nodes[k]`` becomes node ``k``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        sub = self.to_csr()[nodes][:, nodes].tocoo()
        return Graph.from_edges(len(nodes), sub.row, sub.col, sub.data, directed=True) \
            if self.directed else _from_symmetric(len(nodes), sub)

    def with_edges(self, src, dst, weights=None) -> "Graph":
        return Graph.from_edges(self.n, src, dst, weights, directed=self.directed)


def _from_symmetric(n, coo) -> Graph:
    keep = coo.row < coo.col
    return Graph.from_edges(n, coo.row[keep], coo.col[keep], coo.data[keep], directed=False)


@dataclass
class NodeMetadata:
    """Optional per-node labels (ids ``0..C-1``) and covariate rows."""

    labels: Optional[np.ndarray] = None
    covariates: Optional[np.ndarray] = None
    label_names: Optional[list] = None

    def __post_init__(self):
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if len(self.labels):
                present = np.unique(self.labels)
                if present[0] != 0 or present[-1] != len(present) - 1:
                    raise NetEmbedError("label ids must be contiguous integers starting at 0")
        if self.covariates is not None:
            self.covariates = np.asarray(self.covariates, dtype=np.float64)
            if self.covariates.ndim != 2:
                raise NetEmbedError("covariates must be an n x m matrix")
            if self.labels is not None and len(self.covariates) != len(self.labels):
                raise NetEmbedError("covariate row count must match label count")

    @property
    def num_classes(self) -> int:
        return 0 if self.labels is None or not len(self.labels) else int(self.labels.max()) + 1

    def take(self, rows) -> "NodeMetadata":
        labels = self.labels
        if labels is not None:
            sub = labels[rows]
            # re-densify in case a class vanished
            uniq, labels = np.unique(sub, return_inverse=True)
            names = [self.label_names[u] for u in uniq] if self.label_names else None
        else:
            names = None
        cov = None if self.covariates is None else self.covariates[rows]
        return NodeMetadata(labels=labels, covariates=cov, label_names=names)

    def check_size(self, n: int):
        for name, arr in (("labels", self.labels), ("covariates", self.covariates)):
            if arr is not None and len(arr) != n:
                raise NetEmbedError(f"{name} has {len(arr)} rows but the graph has {n} nodes")


@dataclass
class SbmParams:
    block_sizes: list
    within_prob: float = 0.0
    between_prob: float = 0.0
    block_matrix: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.block_sizes = [int(b) for b in self.block_sizes]
        if not self.block_sizes or any(b <= 0 for b in self.block_sizes):
            raise NetEmbedError("block sizes must be positive integers")
        for name in ("within_prob", "between_prob"):
            p = float(getattr(self, name))
            if not 0.0 <= p <= 1.0:
                raise NetEmbedError(f"{name} must lie in [0, 1], got {p}")
            setattr(self, name, p)
        if self.block_matrix is not None:
            bm = np.asarray(self.block_matrix, dtype=np.float64)
            k = len(self.block_sizes)
            if bm.shape != (k, k) or not np.allclose(bm, bm.T):
                raise NetEmbedError("block matrix must be symmetric k x k")
            if np.any((bm < 0) | (bm > 1)):
                raise NetEmbedError("block probabilities must lie in [0, 1]")
            self.block_matrix = bm

    @property
    def n(self) -> int:
        return sum(self.block_sizes)

    def probabilities(self) -> np.ndarray:
        if self.block_matrix is not None:
            return self.block_matrix
        k = len(self.block_sizes)
        return np.where(np.eye(k, dtype=bool), self.within_prob, self.between_prob)


# -- I/O ---------------------------------------------------------------------

def load_edge_list(stream: TextIO, directed: bool = False, node_ids: Optional[Iterable[str]] = None):
    """Parse ``src dst [weight]`` lines into a :class:`Graph`.

    Returns ``(graph, id_map)`` with ``id_map`` mapping the original token to
    the internal id.  Ids listed in ``node_ids`` are assigned first, in order,
    so nodes without edges survive a round trip.
    """
    id_map: dict[str, int] = {}
    for name in node_ids or ():
        id_map.setdefault(str(name), len(id_map))
    src, dst, wts = [], [], []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise ParseError(lineno, f"expected 'src dst [weight]', got {len(tokens)} tokens")
        a, b = tokens[0], tokens[1]
        if a == b:
            raise SelfLoopError(lineno)
        w = 1.0
        if len(tokens) == 3:
            try:
                w = float(tokens[2])
            except ValueError:
                raise ParseError(lineno, f"non-numeric weight {tokens[2]!r}") from None
            if not math.isfinite(w) or w <= 0:
                raise ParseError(lineno, f"weight must be positive and finite, got {tokens[2]}")
        src.append(id_map.setdefault(a, len(id_map)))
        dst.append(id_map.setdefault(b, len(id_map)))
        wts.append(w)
    g = Graph.from_edges(len(id_map), src, dst, wts, directed=directed)
    return g, id_map


def read_edge_list(path, directed=False, node_ids=None):
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh, directed=directed, node_ids=node_ids)


def _names(n, id_map):
    if id_map is None:
        return [str(i) for i in range(n)]
    names = [None] * n
    for name, i in id_map.items():
        names[i] = name
    return names


def write_edge_list(g: Graph, stream: TextIO, id_map: Optional[dict] = None):
    names = _names(g.n, id_map)
    src, dst, w = g.edges()
    weighted = g.is_weighted
    for a, b, x in zip(src.tolist(), dst.tolist(), w.tolist()):
        if weighted:
            stream.write(f"{names[a]} {names[b]} {x:.17g}\n")
        else:
            stream.write(f"{names[a]} {names[b]}\n")


def edge_list_text(g: Graph, id_map=None) -> str:
    buf = io.StringIO()
    write_edge_list(g, buf, id_map)
    return buf.getvalue()


def read_node_table(stream: TextIO):
    """Read a CSV with a header row and the node id in the first column.

    Returns ``(header, ids, rows)`` with ``rows`` holding the remaining
    columns as strings.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, "missing header row") from None
    ids, rows = [], []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise ParseError(lineno, f"expected {len(header)} columns, got {len(rec)}")
        ids.append(rec[0])
        rows.append(rec[1:])
    return header, ids, rows


def metadata_from_tables(id_map: dict, labels_table=None, covariates_table=None) -> NodeMetadata:
    """Align label / covariate tables to the graph's internal ids.

    Label values become contiguous ids in sorted order (numeric labels sorted
    numerically).  Every graph node must appear in each supplied table.
    """
    n = len(id_map)
    labels = names = cov = None
    if labels_table is not None:
        _, ids, rows = labels_table
        raw = _align(id_map, ids, [r[0] for r in rows], "labels")
        names = sorted(set(raw), key=_label_sort_key)
        index = {name: k for k, name in enumerate(names)}
        labels = np.array([index[x] for x in raw], dtype=np.int64)
    if covariates_table is not None:
        _, ids, rows = covariates_table
        aligned = _align(id_map, ids, rows, "covariates")
        try:
            cov = np.array([[float(x) for x in r] for r in aligned], dtype=np.float64).reshape(n, -1)
        except ValueError as exc:
            raise NetEmbedError(f"non-numeric covariate: {exc}") from None
    return NodeMetadata(labels=labels, covariates=cov, label_names=names)


def _label_sort_key(x):
    try:
        return (0, float(x), x)
    except ValueError:
        return (1, 0.0, x)


def _align(id_map, ids, values, what):
    out = [None] * len(id_map)
    for name, val in zip(ids, values):
        k = id_map.get(name)
        if k is not None:
            out[k] = val
    missing = [name for name, k in id_map.items() if out[k] is None]
    if missing:
        raise NetEmbedError(f"{what} missing for {len(missing)} node(s), e.g. {missing[0]!r}")
    return out


def write_labels(stream: TextIO, labels, id_map=None, label_names=None):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["node", "label"])
    names = _names(len(labels), id_map)
    for i, lab in enumerate(np.asarray(labels).tolist()):
        w.writerow([names[i], label_names[lab] if label_names else lab])


# -- generation and structure -------------------------------------------------

def generate_sbm(params: SbmParams, seed: int):
    """Sample an undirected, unweighted SBM graph; returns ``(graph, block_labels)``."""
    probs = params.probabilities()
    sizes = params.block_sizes
    starts = np.concatenate([[0], np.cumsum(sizes)])
    rng = generator(seed, "sbm")
    src, dst = [], []
    for a in range(len(sizes)):
        for b in range(a, len(sizes)):
            p = probs[a, b]
            if a == b:
                rows, cols = np.triu_indices(sizes[a], 1)
                hit = rng.random(len(rows)) < p
                src.append(rows[hit] + starts[a])
                dst.append(cols[hit] + starts[a])
            else:
                hit = rng.random((sizes[a], sizes[b])) < p
                rows, cols = np.nonzero(hit)
                src.append(rows + starts[a])
                dst.append(cols + starts[b])
    labels = np.repeat(np.arange(len(sizes), dtype=np.int64), sizes)
    g = Graph.from_edges(params.n, np.concatenate(src), np.concatenate(dst))
    return g, labels


def largest_connected_component(g: Graph, meta: Optional[NodeMetadata] = None,
                                return_index: bool = False):
    """Induced subgraph on the largest (weakly) connected component.

    Ties go to the component holding the smallest node id.  Returns
    ``(graph, meta)`` or ``(graph, meta, kept_nodes)``.
    """
    if g.n == 0:
        raise EmptyGraphError("graph has no nodes")
    _, comp = connected_components(g.to_csr(), directed=g.directed, connection="weak")
    sizes = np.bincount(comp)
    # components are numbered in order of their smallest node, so argmax
    # already breaks ties towards the smallest id
    best = int(np.argmax(sizes))
    nodes = np.flatnonzero(comp == best)
    sub = g.subgraph(nodes)
    sub_meta = meta.take(nodes) if meta is not None else None
    if return_index:
        return sub, sub_meta, nodes
    return sub, sub_meta


def transition_probs(g: Graph, node: int) -> np.ndarray:
    """One-step probabilities W_ij / sum_k W_ik, aligned with ``g.neighbors(node)``."""
    if not 0 <= node < g.n:
        raise NetEmbedError(f"node {node} out of range")
    w = g.neighbor_weights(node)
    if len(w) == 0:
        raise IsolatedNodeError(node)
    return w / w.sum()


LAPLACIAN_KINDS = ("unnormalized", "sym_normalized", "random_walk")


def laplacian(g: Graph, kind: str = "unnormalized"):
    """Return ``(L, degree)`` with ``L`` a CSR matrix.

    Normalised kinds treat D^-1/2 and D^-1 as zero on zero-degree nodes, so
    those rows (and their diagonal) are zero.
    """
    if g.directed:
        raise DirectedGraphError("Laplacian requires an undirected graph")
    if kind not in LAPLACIAN_KINDS:
        raise NetEmbedError(f"unknown Laplacian kind {kind!r}")
    W = g.to_csr()
    deg = np.asarray(W.sum(axis=1)).ravel()
    if kind == "unnormalized":
        L = sp.diags(deg) - W
    else:
        nz = deg > 0
        eye = sp.diags(nz.astype(float))
        if kind == "sym_normalized":
            s = np.zeros_like(deg)
            s[nz] = 1.0 / np.sqrt(deg[nz])
            L = eye - sp.diags(s) @ W @ sp.diags(s)
        else:
            s = np.zeros_like(deg)
            s[nz] = 1.0 / deg[nz]
            L = eye - sp.diags(s) @ W
    return sp.csr_matrix(L), deg


def _count_for(fraction: float, m: int) -> int:
    # tolerate representation error such as 0.29 * 100 = 28.999999999999996
    return int(math.floor(fraction * m + 1e-9))


def _decode_pairs(k: np.ndarray, n: int, directed: bool):
    if directed:
        i = k // (n - 1)
        r = k % (n - 1)
        return i, np.where(r < i, r, r + 1)
    # row-major upper triangle: row i starts at i*n - i*(i+1)/2
    def row_start(i):
        return i * n - i * (i + 1) // 2

    kf = k.astype(np.float64)
    i = (n - 2 - np.floor(np.sqrt(-8 * kf + 4 * n * (n - 1) - 7) / 2 - 0.5)).astype(np.int64)
    # the float estimate can be off by one near row boundaries
    i = np.where(k < row_start(i), i - 1, i)
    i = np.where(k >= row_start(i + 1), i + 1, i)
    return i, k - row_start(i) + i + 1


def perturb(g: Graph, mode: str, fraction: float, seed: int) -> Graph:
    """Remove a fraction of edges, or toggle that many uniformly chosen node pairs."""
    if not 0.0 <= fraction <= 1.0:
        raise NetEmbedError(f"fraction must lie in [0, 1], got {fraction}")
    src, dst, w = g.edges()
    m = _count_for(fraction, len(src))
    rng = generator(seed, "perturb", mode)
    if mode == "remove_edges":
        drop = rng.choice(len(src), size=m, replace=False)
        keep = np.ones(len(src), dtype=bool)
        keep[drop] = False
        return g.with_edges(src[keep], dst[keep], w[keep])
    if mode == "flip_pairs":
        n = g.n
        total = n * (n - 1) if g.directed else n * (n - 1) // 2
        if m > total:
            raise NetEmbedError("more flips requested than node pairs exist")
        pi, pj = _decode_pairs(rng.choice(total, size=m, replace=False).astype(np.int64), n, g.directed)
        existing = src * n + dst
        flip = pi * n + pj
        present = np.isin(flip, existing)
        keep = ~np.isin(existing, flip[present])
        add = ~present
        return g.with_edges(
            np.concatenate([src[keep], pi[add]]),
            np.concatenate([dst[keep], pj[add]]),
            np.concatenate([w[keep], np.ones(int(add.sum()))]),
        )
    raise NetEmbedError(f"unknown perturbation mode {mode!r}")
