"""Laplacian eigenmaps and normalised-Laplacian spectral embedding."""
from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .._rng import generator
from ..errors import ConvergenceError, DimensionError, NetEmbedError
from ..graph import Graph, laplacian
from .base import Embedding, fix_signs

SPECTRAL_KINDS = ("adjacency_spectral", "laplacian_eigenmap")
DENSE_MAX_N = 512


def _smallest_nontrivial(L_sym, t, d, solver, tol):
    """d smallest eigenpairs of L_sym on the complement of the trivial vector t."""
    n = L_sym.shape[0]
    if solver == "auto":
        solver = "dense" if n <= DENSE_MAX_N else "iterative"
    if solver == "dense":
        # spectrum of L_sym lies in [0, 2]; lifting t to 3 drops it from the bottom
        M = L_sym.toarray() + 3.0 * np.outer(t, t)
        vals, vecs = scipy.linalg.eigh(M, subset_by_index=[0, d - 1])
        return vals, vecs
    # Lanczos on the largest end of 2I - L_sym with t deflated to eigenvalue 0
    def matvec(x):
        x = np.asarray(x).ravel()
        return 2.0 * x - L_sym @ x - 2.0 * t * (t @ x)

    op = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
    v0 = generator(0, "lanczos-start", n).standard_normal(n)
    try:
        mu, vecs = eigsh(op, k=d, which="LA", tol=tol, maxiter=10 * n, v0=v0)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge: {exc}") from None
    vals = 2.0 - mu
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


def spectral_embedding(g: Graph, d: int, kind: str = "laplacian_eigenmap",
                       solver: str = "auto", tol: float = 1e-8) -> Embedding:
    """Eigenvectors of the d smallest nontrivial eigenvalues of L_sym.

    ``laplacian_eigenmap`` maps them through D^-1/2, i.e. solves L u = lambda D u
    normalised so that Z^T D Z = I.  ``adjacency_spectral`` returns the L_sym
    eigenvectors themselves.  The trivial vector D^1/2 1 is excluded.  Columns
    follow the first-nonzero-entry-positive sign convention.
    """
    if kind not in SPECTRAL_KINDS:
        raise NetEmbedError(f"unknown spectral kind {kind!r}")
    if d < 1 or d >= g.n:
        raise DimensionError(f"need 1 <= d < n, got d={d}, n={g.n}")
    L_sym, deg = laplacian(g, "sym_normalized")
    if kind == "laplacian_eigenmap" and np.any(deg == 0):
        raise NetEmbedError(
            f"node {int(np.flatnonzero(deg == 0)[0])} has degree 0; embed the largest component"
        )
    sq = np.sqrt(deg)
    t = sq / np.linalg.norm(sq)
    vals, V = _smallest_nontrivial(L_sym, t, d, solver, tol)
    if kind == "laplacian_eigenmap":
        Z = V / sq[:, None]
    else:
        Z = V
    Z = fix_signs(Z)
    return Embedding(center=Z, method=kind, info={"eigenvalues": vals.tolist()})
