"""Latent space model: logit p_ij = alpha - ||z_i - z_j||, fit by gradient-ascent MLE."""
from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.spatial.distance import pdist, squareform

from .._rng import generator
from ..errors import DimensionError, DirectedGraphError, EmptyGraphError
from ..graph import Graph
from .base import TrainConfig, fix_signs
from .skipgram import sigmoid


def _check(g):
    if g.directed:
        raise DirectedGraphError("latent space model needs an undirected graph")


def _condensed_adjacency(g: Graph) -> np.ndarray:
    A = (g.to_dense() > 0).astype(np.float64)
    return squareform(A, checks=False)


def _evaluate(a: np.ndarray, Z: np.ndarray, alpha: float, need_grad: bool = True):
    # a: condensed 0/1 adjacency over pairs i<j, same order as pdist
    D = pdist(Z)
    eta = alpha - D
    sp = np.logaddexp(0.0, eta)
    ll = float(np.dot(a, eta)) - float(sp.sum())
    if not need_grad:
        return ll, None, None
    # residual a - sigmoid(eta), with sigmoid(eta) = exp(eta - softplus(eta))
    r = a - np.exp(eta - sp)
    g_alpha = float(r.sum())
    c = np.divide(r, D, out=np.zeros_like(r), where=D > 0)
    C = squareform(c, checks=False)
    # d eta_ij / d z_i = -(z_i - z_j) / D_ij
    g_Z = C @ Z - C.sum(axis=1)[:, None] * Z
    return ll, g_Z, g_alpha


def lsm_log_likelihood(g: Graph, positions: np.ndarray, alpha: float) -> float:
    """sum_{i<j} A_ij eta_ij - log(1 + exp(eta_ij)), eta_ij = alpha - ||z_i - z_j||."""
    _check(g)
    Z = np.asarray(positions, dtype=np.float64)
    return _evaluate(_condensed_adjacency(g), Z, float(alpha), need_grad=False)[0]


def lsm_grad(A: np.ndarray, Z: np.ndarray, alpha: float):
    """Log-likelihood and its gradient for a dense symmetric 0/1 adjacency ``A``.

    Returns ``(loglik, grad_positions, grad_alpha)``.  Coincident points get a
    zero subgradient for their pair.
    """
    a = squareform(np.asarray(A, dtype=np.float64), checks=False)
    return _evaluate(a, np.asarray(Z, dtype=np.float64), float(alpha))


def _spectral_init(A, d, rng):
    n = A.shape[0]
    vals, vecs = scipy.linalg.eigh(A, subset_by_index=[n - d, n - 1])
    Z = fix_signs(vecs[:, ::-1])
    Z = Z / np.sqrt(np.mean(np.sum(Z * Z, axis=1)))
    # separate rows that coincide (structurally equivalent nodes)
    return Z + 1e-3 * rng.standard_normal(Z.shape)


def fit_latent_space(g: Graph, d: int, config: TrainConfig, seed: int, tol: float = 1e-10):
    """Full-batch gradient ascent with Armijo backtracking from a
    Barzilai-Borwein trial step.

    Returns ``(positions, alpha, loglik_trace)``; positions are centred at the
    origin.  The trace holds the log-likelihood after each accepted step and is
    non-decreasing.
    """
    _check(g)
    n = g.n
    if n < 2:
        raise EmptyGraphError("latent space model needs at least two nodes")
    if not 1 <= d <= n:
        raise DimensionError(f"need 1 <= d <= n, got d={d}, n={n}")
    A = (g.to_dense() > 0).astype(np.float64)
    a = squareform(A, checks=False)
    rng = generator(seed, "lsm")
    Z = _spectral_init(A, d, rng)
    if config.lsm_alpha_init is not None:
        alpha = float(config.lsm_alpha_init)
    else:
        density = np.clip(g.num_edges / (n * (n - 1) / 2), 1e-6, 1 - 1e-6)
        alpha = float(np.log(density / (1 - density)))
    ll, gZ, ga = _evaluate(a, Z, alpha)
    trace = [ll]
    step = 1.0 / max(1.0, np.sqrt(np.sum(gZ * gZ) + ga * ga))
    for _ in range(config.lsm_steps):
        gnorm2 = float(np.sum(gZ * gZ) + ga * ga)
        if gnorm2 == 0:
            break
        while step > 1e-16:
            Zn, an = Z + step * gZ, alpha + step * ga
            ll_new = _evaluate(a, Zn, an, need_grad=False)[0]
            if ll_new >= ll + 1e-4 * step * gnorm2:
                break
            step *= 0.5
        else:
            break
        _, gZn, gan = _evaluate(a, Zn, an)
        improvement = ll_new - ll
        # Barzilai-Borwein trial step for the next iteration
        sy = step * (float(np.sum(gZ * (gZn - gZ))) + ga * (gan - ga))
        ss = step * step * gnorm2
        step = ss / -sy if sy < 0 else 2.0 * step
        Z, alpha, ll, gZ, ga = Zn, an, ll_new, gZn, gan
        trace.append(ll)
        if improvement <= tol * max(1.0, abs(ll)):
            break
    return Z - Z.mean(axis=0), alpha, trace
