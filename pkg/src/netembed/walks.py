"""Random-walk corpora: first-order (DeepWalk) and second-order (node2vec) walks."""
from __future__ import annotations

import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, TextIO

import numpy as np

from . import _kernels
from ._rng import derive_seed, generator
from .errors import NetEmbedError
from .graph import Graph

FIRST_ORDER = "first_order"
NODE2VEC = "node2vec"


@dataclass(frozen=True)
class AliasTable:
    """Walker/Vose alias table: O(1) draws from a fixed discrete distribution."""

    prob: np.ndarray
    alias: np.ndarray

    @property
    def size(self) -> int:
        return len(self.prob)

    def probabilities(self) -> np.ndarray:
        """Distribution encoded by the table (for checking reconstruction)."""
        k = self.size
        out = self.prob.copy()
        np.add.at(out, self.alias, 1.0 - self.prob)
        return out / k

    def sample(self, rng: np.random.Generator, size=None):
        k = self.size
        idx = rng.integers(0, k, size=size)
        coin = rng.random(size=size)
        return np.where(coin < self.prob[idx], idx, self.alias[idx])


def _alias_arrays(weights):
    """Vose's construction; returns ``(prob, alias)`` lists."""
    k = len(weights)
    total = float(sum(weights))
    scaled = [w * k / total for w in weights]
    prob = [0.0] * k
    alias = list(range(k))
    small = [i for i, s in enumerate(scaled) if s < 1.0]
    large = [i for i, s in enumerate(scaled) if s >= 1.0]
    while small and large:
        lo = small.pop()
        hi = large.pop()
        prob[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        if scaled[hi] < 1.0:
            small.append(hi)
        else:
            large.append(hi)
    # leftovers are 1 up to rounding
    for i in large + small:
        prob[i] = 1.0
        alias[i] = i
    return prob, alias


def build_alias_table(weights) -> AliasTable:
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        raise NetEmbedError("alias table needs at least one weight")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise NetEmbedError("alias weights must be finite and non-negative")
    if not np.any(w > 0):
        raise NetEmbedError("alias weights are all zero")
    prob, alias = _alias_arrays(w.tolist())
    return AliasTable(np.array(prob), np.array(alias, dtype=np.int64))


_csr_alias_cache: "weakref.WeakKeyDictionary[Graph, tuple]" = weakref.WeakKeyDictionary()


def csr_alias(g: Graph):
    """Per-node alias tables laid out along the CSR arrays (local indices)."""
    cached = _csr_alias_cache.get(g)
    if cached is not None:
        return cached
    prob = np.ones(g.num_arcs)
    alias = np.zeros(g.num_arcs, dtype=np.int64)
    indptr = g.indptr
    w = g.weights
    for v in range(g.n):
        lo, hi = indptr[v], indptr[v + 1]
        if hi - lo == 0:
            continue
        seg = w[lo:hi]
        if seg.min() == seg.max():
            alias[lo:hi] = np.arange(hi - lo)
            continue
        p, a = _alias_arrays(seg.tolist())
        prob[lo:hi] = p
        alias[lo:hi] = a
    _csr_alias_cache[g] = (prob, alias)
    return prob, alias


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 40
    mode: str = FIRST_ORDER
    p: float = 1.0
    q: float = 1.0

    def __post_init__(self):
        if self.walks_per_node < 1:
            raise NetEmbedError("walks_per_node must be >= 1")
        if self.walk_length < 2:
            raise NetEmbedError("walk_length must be >= 2")
        if self.mode not in (FIRST_ORDER, NODE2VEC):
            raise NetEmbedError(f"unknown walk mode {self.mode!r}")
        if not (self.p > 0 and self.q > 0):
            raise NetEmbedError("node2vec p and q must be positive")


@dataclass
class WalkCorpus:
    """Walks stored flat: walk ``k`` is ``nodes[offsets[k]:offsets[k+1]]``."""

    nodes: np.ndarray
    offsets: np.ndarray
    config: Optional[WalkConfig] = None
    seed: Optional[int] = None
    num_nodes: Optional[int] = field(default=None)

    @classmethod
    def from_walks(cls, walks, num_nodes=None, config=None, seed=None) -> "WalkCorpus":
        lengths = [len(w) for w in walks]
        nodes = np.concatenate([np.asarray(w, dtype=np.int64) for w in walks]) if walks \
            else np.zeros(0, dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        return cls(nodes, offsets, config, seed, num_nodes)

    def __len__(self):
        return len(self.offsets) - 1

    def __getitem__(self, k):
        return self.nodes[self.offsets[k]:self.offsets[k + 1]]

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @property
    def walks(self):
        return list(self)

    def counts(self, n: Optional[int] = None) -> np.ndarray:
        n = n or self.num_nodes or (int(self.nodes.max()) + 1 if len(self.nodes) else 0)
        return np.bincount(self.nodes, minlength=n)

    def write(self, stream: TextIO):
        for walk in self:
            stream.write(" ".join(map(str, walk.tolist())))
            stream.write("\n")


def _chunks(m: int, parts: int):
    parts = max(1, min(parts, m))
    bounds = np.linspace(0, m, parts + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run_walks(g, starts, walk_ids, config, seed_key, threads=1, backend=None):
    kern = _kernels.get_backend(backend)
    m = len(starts)
    out = np.zeros((m, config.walk_length), dtype=np.int64)
    lengths = np.zeros(m, dtype=np.int64)
    if m == 0:
        return out, lengths
    prob, alias = csr_alias(g)
    n2v = config.mode == NODE2VEC

    def work(bounds):
        lo, hi = bounds
        kern.random_walks(
            g.indptr, g.indices, g.weights, prob, alias,
            starts[lo:hi], walk_ids[lo:hi], config.walk_length, n2v,
            float(config.p), float(config.q), seed_key, out[lo:hi], lengths[lo:hi],
        )

    if threads > 1 and m > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, _chunks(m, threads * 4)))
    else:
        work((0, m))
    return out, lengths


def sample_walk(g: Graph, start: int, config: WalkConfig, seed: int,
                backend: Optional[str] = None) -> np.ndarray:
    """One walk of at most ``config.walk_length`` nodes starting at ``start``.

    Stops early at a node without out-neighbours.
    """
    if not 0 <= start < g.n:
        raise NetEmbedError(f"start node {start} out of range")
    out, lengths = _run_walks(
        g, np.array([start], dtype=np.int64), np.zeros(1, dtype=np.int64),
        config, derive_seed(seed, "walk", int(start)), backend=backend,
    )
    return out[0, :lengths[0]].copy()


def generate_corpus(g: Graph, config: WalkConfig, seed: int, threads: int = 1,
                    backend: Optional[str] = None) -> WalkCorpus:
    """``walks_per_node`` passes over the nodes in shuffled order.

    Each walk draws from its own stream keyed by (seed, pass, start node), so
    the corpus does not depend on ``threads``.  Nodes without out-neighbours
    start no walks.
    """
    if g.n == 0:
        raise NetEmbedError("cannot walk an empty graph")
    live = g.out_degree() > 0
    starts, ids = [], []
    shuffler = generator(seed, "shuffle")
    for r in range(config.walks_per_node):
        order = shuffler.permutation(g.n)
        order = order[live[order]]
        starts.append(order)
        ids.append(order + r * g.n)
    starts = np.concatenate(starts).astype(np.int64)
    ids = np.concatenate(ids).astype(np.int64)
    out, lengths = _run_walks(g, starts, ids, config, derive_seed(seed, "walks"),
                                 threads, backend)
    mask = np.arange(config.walk_length)[None, :] < lengths[:, None]
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    return WalkCorpus(out[mask], offsets, config, seed, g.n)
