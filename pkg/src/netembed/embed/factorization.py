"""Graph factorization: squared error on observed edges plus a ridge penalty."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .. import _kernels
from .._rng import generator
from ..errors import NetEmbedError
from ..graph import Graph
from .base import Embedding, TrainConfig


def gf_loss(g: Graph, Z: np.ndarray, ridge: float) -> float:
    """0.5 * sum_(i,j) in E (W_ij - z_i . z_j)**2 + ridge/2 * ||Z||_F**2"""
    src, dst, w = g.edges()
    r = w - np.einsum("ij,ij->i", Z[src], Z[dst])
    return float(0.5 * r @ r + 0.5 * ridge * np.sum(Z * Z))


def gf_loss_and_grad(g: Graph, Z: np.ndarray, ridge: float):
    src, dst, w = g.edges()
    r = w - np.einsum("ij,ij->i", Z[src], Z[dst])
    grad = ridge * Z
    np.add.at(grad, src, -r[:, None] * Z[dst])
    np.add.at(grad, dst, -r[:, None] * Z[src])
    return float(0.5 * r @ r + 0.5 * ridge * np.sum(Z * Z)), grad


def graph_factorization(g: Graph, config: TrainConfig, seed: int,
                        backend: Optional[str] = None) -> Embedding:
    """SGD over observed edges, one shuffled pass per epoch.

    Each node's ridge term is split evenly across its incident edges and
    applied as a proximal shrink, so the per-epoch gradient matches the full
    objective and large ridge values stay stable.  Nodes without edges sit at
    the ridge minimiser, zero.
    """
    if g.num_edges == 0:
        raise NetEmbedError("graph factorization needs at least one edge")
    kern = _kernels.get_backend(backend)
    d = config.dim
    lr0 = config.learning_rate or 0.05
    epochs = config.epochs or 300
    src, dst, w = g.edges()
    m = len(src)
    touches = np.bincount(src, minlength=g.n) + np.bincount(dst, minlength=g.n)
    reg = np.where(touches > 0, config.ridge / np.maximum(touches, 1), 0.0)
    rng = generator(seed, "gf")
    Z = np.ascontiguousarray(rng.uniform(-1.0, 1.0, size=(g.n, d)) / np.sqrt(d))
    Z[touches == 0] = 0.0
    total = epochs * m
    trace = [gf_loss(g, Z, config.ridge)]
    for ep in range(epochs):
        order = rng.permutation(m).astype(np.int64)
        kern.gf_epoch(src, dst, w, order, reg, Z, lr0, lr0 * config.lr_floor, total,
                      ep * m, 0, m)
        trace.append(gf_loss(g, Z, config.ridge))
    return Embedding(center=Z, method="gf", seed=seed,
                     info={"loss_trace": trace, "learning_rate": lr0, "epochs": epochs,
                           "ridge": config.ridge})
