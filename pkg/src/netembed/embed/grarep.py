"""GraRep: truncated SVD of shifted log k-step transition matrices."""
from __future__ import annotations

from typing import Optional

import numpy as np
import scipy.linalg

from ..errors import DimensionError, IsolatedNodeError
from ..graph import Graph
from .base import Embedding, column_signs


def transition_powers(g: Graph, K: int) -> list[np.ndarray]:
    """Dense row-stochastic T, T^2, ..., T^K with T = D^-1 W."""
    deg = g.strength()
    if np.any(deg == 0):
        raise IsolatedNodeError(int(np.flatnonzero(deg == 0)[0]))
    T = g.to_dense() / deg[:, None]
    out = [T]
    for _ in range(K - 1):
        out.append(out[-1] @ T)
    return out


def shifted_log_matrix(Tk: np.ndarray, shift: float) -> np.ndarray:
    """max(log(T_ij / Gamma_j) - log(shift / n), 0) with Gamma_j the column sum."""
    n = Tk.shape[0]
    gamma = Tk.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        X = np.log(Tk / gamma[None, :]) - np.log(shift / n)
    X[~np.isfinite(X)] = 0.0
    return np.maximum(X, 0.0)


def factorize(X: np.ndarray, rank: int):
    """Rank-``rank`` factors ``(U S^1/2, V S^1/2)`` with ``X ~ left @ right.T``."""
    U, S, Vt = scipy.linalg.svd(X, full_matrices=False)
    U, S, V = U[:, :rank], S[:rank], Vt[:rank].T
    signs = column_signs(U)
    root = np.sqrt(S)
    return U * signs * root, V * signs * root


def step_ranks(d: int, K: int) -> list[int]:
    base, extra = divmod(d, K)
    return [base + (1 if k < extra else 0) for k in range(K)]


def grarep(g: Graph, d: int, K: int = 4, shift: float = 1.0, seed: Optional[int] = None) -> Embedding:
    """Concatenate per-step SVD factors of the shifted log transition matrices.

    The d columns are shared across the K steps as evenly as possible (earlier
    steps take the remainder).  Deterministic; ``seed`` is recorded only.
    """
    if d < 1 or K < 1:
        raise DimensionError("d and K must be positive")
    ranks = step_ranks(d, K)
    if max(ranks) > g.n:
        raise DimensionError(f"rank {max(ranks)} per step exceeds n={g.n}")
    left, right = [], []
    for Tk, r in zip(transition_powers(g, K), ranks):
        if r == 0:
            continue
        a, b = factorize(shifted_log_matrix(Tk, shift), r)
        left.append(a)
        right.append(b)
    return Embedding(center=np.hstack(left), context=np.hstack(right), method="grarep",
                     seed=seed, info={"steps": K, "shift": shift, "ranks": ranks})
