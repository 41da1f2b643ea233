"""LINE (first- and second-order proximity) trained by edge sampling."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .. import _kernels
from .._rng import derive_seed, generator
from ..errors import NetEmbedError
from ..graph import Graph
from ..walks import build_alias_table
from .base import Embedding, TrainConfig
from .skipgram import log_sigmoid, ns_loss_and_grad, sigmoid


def line_loss(g: Graph, Z: np.ndarray, Zc: Optional[np.ndarray] = None, order: int = 1) -> float:
    """Exact LINE loss summed over stored arcs (both directions when undirected).

    order 1: -sum W_ij log s(z_i . z_j); order 2: -sum W_ij log softmax_j(Zc z_i).
    """
    src, dst, w = g.arcs()
    if order == 1:
        return float(-(w * log_sigmoid(np.einsum("ij,ij->i", Z[src], Z[dst]))).sum())
    if order == 2:
        if Zc is None:
            raise NetEmbedError("second-order loss needs context vectors")
        logits = Z @ Zc.T
        logp = logits - logsumexp(logits, axis=1, keepdims=True)
        return float(-(w * logp[src, dst]).sum())
    raise NetEmbedError(f"LINE order must be 1 or 2, got {order}")


def line_loss_and_grad(g: Graph, Z: np.ndarray):
    """First-order loss and its gradient with respect to ``Z``."""
    src, dst, w = g.arcs()
    f = np.einsum("ij,ij->i", Z[src], Z[dst])
    loss = float(-(w * log_sigmoid(f)).sum())
    coef = -w * (1.0 - sigmoid(f))
    grad = np.zeros_like(Z)
    np.add.at(grad, src, coef[:, None] * Z[dst])
    np.add.at(grad, dst, coef[:, None] * Z[src])
    return loss, grad


def line_edge_term(z_i, z_j, z_negs):
    """Objective and gradients of one sampled edge with its negatives
    (to be maximised); same form for both orders, only the target vectors
    differ."""
    return ns_loss_and_grad(z_i, z_j, z_negs)


def train_line(g: Graph, order: int, config: TrainConfig, seed: int,
               threads: Optional[int] = None, backend: Optional[str] = None,
               track_objective: bool = False) -> Embedding:
    """Edge-sampling SGD: ``epochs * |E|`` draws, each one positive and
    ``negatives`` noise steps.  Noise is degree**0.75 (in-degree when directed)."""
    if order not in (1, 2):
        raise NetEmbedError(f"LINE order must be 1 or 2, got {order}")
    if g.num_edges == 0:
        raise NetEmbedError("LINE needs at least one edge")
    kern = _kernels.get_backend(backend)
    threads = threads or config.threads
    d = config.dim
    lr0 = config.learning_rate or 0.025
    epochs = config.epochs or 200
    src, dst, w = g.arcs()
    edge_table = build_alias_table(w)
    in_strength = np.bincount(dst, weights=w, minlength=g.n)
    noise = build_alias_table(in_strength ** config.noise_exponent)
    rng = generator(seed, "line-init", order)
    Z = np.ascontiguousarray(rng.uniform(-0.5 / d, 0.5 / d, size=(g.n, d)))
    Zc = np.zeros((g.n, d)) if order == 2 else None
    Zt = Zc if order == 2 else Z
    total = epochs * g.num_edges
    key = derive_seed(seed, "line", order)

    def work(bounds):
        lo, hi = bounds
        return kern.line_train(src, dst, edge_table.prob, edge_table.alias, noise.prob,
                               noise.alias, Z, Zt, config.negatives, lr0,
                               lr0 * config.lr_floor, total, lo, hi, key, track_objective)

    if threads > 1:
        bounds = np.linspace(0, total, threads * 4 + 1).astype(np.int64)
        chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ThreadPoolExecutor(threads) as pool:
            obj = sum(pool.map(work, chunks))
    else:
        obj = work((0, total))
    info = {"samples": total, "order": order,
            "learning_rate": lr0, "epochs": epochs, "threads": threads}
    if track_objective:
        info["objective_mean"] = obj / total
    return Embedding(center=Z, context=Zc, method=f"line{order}", seed=seed, info=info)
