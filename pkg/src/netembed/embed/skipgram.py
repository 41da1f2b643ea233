"""SkipGram with negative sampling over a walk corpus (DeepWalk / node2vec)."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .. import _kernels
from .._rng import derive_seed, generator
from ..errors import DimensionError, NetEmbedError
from ..walks import WalkCorpus, build_alias_table
from .base import Embedding, TrainConfig


def unigram_noise(corpus: WalkCorpus, n: Optional[int] = None, exponent: float = 0.75) -> np.ndarray:
    """Noise distribution P_n(v) proportional to count(v)**exponent."""
    if len(corpus.nodes) == 0:
        raise NetEmbedError("corpus is empty")
    counts = corpus.counts(n).astype(np.float64)
    w = counts ** exponent
    return w / w.sum()


def log_sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))), x - np.log1p(np.exp(-np.abs(x))))


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def ns_loss_and_grad(z_center, z_pos, z_negs):
    """Negative-sampling objective for one (center, positive, negatives) tuple.

    Returns ``(objective, g_center, g_pos, g_negs)`` where the objective,
    ``log s(z_pos . z) + sum_l log s(-z_neg_l . z)``, is to be maximised and the
    gradients are exact.
    """
    z = np.asarray(z_center, dtype=np.float64)
    zp = np.asarray(z_pos, dtype=np.float64)
    zn = np.asarray(z_negs, dtype=np.float64)
    if zn.size == 0:
        zn = np.zeros((0, z.shape[0]))
    if z.ndim != 1 or zp.shape != z.shape or zn.ndim > 2 or zn.shape[-1] != z.shape[0]:
        raise DimensionError("center, positive and negative vectors must share a dimension")
    zn = zn.reshape(-1, z.shape[0])
    fp = zp @ z
    fn = zn @ z
    obj = float(log_sigmoid(fp) + log_sigmoid(-fn).sum())
    cp = 1.0 - sigmoid(fp)
    cn = -sigmoid(fn)
    g_center = cp * zp + cn @ zn
    g_pos = cp * z
    g_negs = cn[:, None] * z[None, :]
    return obj, g_center, g_pos, g_negs


def window_pairs(lengths: np.ndarray, window: int) -> np.ndarray:
    """Number of (center, context) pairs in walks of the given lengths."""
    L = np.asarray(lengths, dtype=np.int64)
    w = int(window)
    # sum_i min(i, w) for i < L, counted once per side
    short = (L - 1) * L // 2
    long_ = w * (w + 1) // 2 + (L - 1 - w) * w
    return 2 * np.where(L - 1 <= w, short, long_)


def _split_by_work(work: np.ndarray, parts: int):
    cum = np.cumsum(work)
    total = cum[-1] if len(cum) else 0
    cuts = [0]
    for k in range(1, parts):
        cuts.append(int(np.searchsorted(cum, total * k / parts)))
    cuts.append(len(work))
    cuts = sorted(set(cuts))
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def train_skipgram(corpus: WalkCorpus, config: TrainConfig, seed: int,
                   n: Optional[int] = None, threads: Optional[int] = None,
                   backend: Optional[str] = None, track_objective: bool = False) -> Embedding:
    """Fit center/context vectors by SGD on the negative-sampling objective.

    One ascent step per (center, context) pair within ``config.window``;
    ``threads > 1`` runs disjoint walk ranges concurrently without locking
    (non-deterministic).  With ``track_objective`` the mean pre-step objective
    of each epoch is recorded in ``info['objective_trace']``.
    """
    kern = _kernels.get_backend(backend)
    n = n or corpus.num_nodes or (int(corpus.nodes.max()) + 1 if len(corpus.nodes) else 0)
    if len(corpus) == 0 or len(corpus.nodes) == 0:
        raise NetEmbedError("corpus is empty")
    if corpus.nodes.min() < 0 or corpus.nodes.max() >= n:
        raise NetEmbedError(f"corpus refers to node ids outside 0..{n - 1}")
    d = config.dim
    lr0 = config.learning_rate or 0.025
    epochs = config.epochs or 1
    threads = threads or config.threads
    rng = generator(seed, "sgns-init")
    Z = np.ascontiguousarray(rng.uniform(-0.5 / d, 0.5 / d, size=(n, d)))
    Zc = np.zeros((n, d))
    noise = build_alias_table(unigram_noise(corpus, n, config.noise_exponent))
    key = derive_seed(seed, "sgns")

    nodes = np.ascontiguousarray(corpus.nodes, dtype=np.int64)
    offsets = np.ascontiguousarray(corpus.offsets, dtype=np.int64)
    pairs = window_pairs(np.diff(offsets), config.window)
    per_epoch = int(pairs.sum())
    total = max(1, per_epoch * epochs)
    starts = np.concatenate([[0], np.cumsum(pairs)])
    W = len(corpus)
    chunks = _split_by_work(pairs, threads * 4) if threads > 1 else [(0, W)]
    trace = []
    for ep in range(epochs):
        def work(bounds, ep=ep):
            lo, hi = bounds
            return kern.sgns_train(
                nodes, offsets, lo, hi, ep * W, ep * per_epoch + int(starts[lo]), total,
                Z, Zc, noise.prob, noise.alias, config.window, config.negatives,
                lr0, lr0 * config.lr_floor, key, track_objective,
            )

        if len(chunks) > 1:
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(work, chunks))
        else:
            results = [work(chunks[0])]
        if track_objective:
            trace.append(sum(r[0] for r in results) / max(sum(r[1] for r in results), 1))
    return Embedding(
        center=Z, context=Zc, method="skipgram", seed=seed,
        info={"objective_trace": trace, "updates": total, "learning_rate": lr0,
              "lr_floor": config.lr_floor, "epochs": epochs, "threads": threads},
    )
