"""Embedding container, training configuration, similarities and alignment."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional, TextIO

import numpy as np

from ..errors import DimensionError, NetEmbedError


@dataclass
class Embedding:
    """Node vectors ``center`` (n x d), plus ``context`` for dual-role methods."""

    center: np.ndarray
    context: Optional[np.ndarray] = None
    method: str = ""
    seed: Optional[int] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.center.ndim != 2 or self.center.shape[1] < 1:
            raise DimensionError("embedding must be an n x d matrix with d >= 1")
        if not np.all(np.isfinite(self.center)):
            raise NetEmbedError(f"{self.method or 'embedding'} produced non-finite values")
        if self.context is not None:
            self.context = np.asarray(self.context, dtype=np.float64)
            if self.context.shape != self.center.shape:
                raise DimensionError("context matrix must match the center matrix")

    @property
    def n(self) -> int:
        return self.center.shape[0]

    @property
    def dim(self) -> int:
        return self.center.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by all trainers.

    ``None`` for ``learning_rate`` / ``epochs`` means the trainer's own default
    (SkipGram 0.025 / 1 epoch, LINE 0.025 / 200, factorization 0.05 / 300).  The learning
    rate decays linearly to ``lr_floor * learning_rate`` over all updates.
    """

    dim: int = 32
    learning_rate: Optional[float] = None
    lr_floor: float = 1e-4
    epochs: Optional[int] = None
    negatives: int = 5
    window: int = 5
    walks_per_node: int = 10
    walk_length: int = 40
    p: float = 1.0
    q: float = 1.0
    noise_exponent: float = 0.75
    grarep_steps: int = 4
    grarep_shift: float = 1.0
    ridge: float = 1e-3
    lsm_steps: int = 100
    lsm_alpha_init: Optional[float] = None
    solver: str = "auto"
    threads: int = 1

    def __post_init__(self):
        positive = ["dim", "lr_floor", "negatives", "window", "walks_per_node", "p", "q",
                    "noise_exponent", "grarep_steps", "grarep_shift", "lsm_steps", "threads"]
        for name in positive:
            if not getattr(self, name) > 0:
                raise NetEmbedError(f"{name} must be positive, got {getattr(self, name)}")
        if self.walk_length < 2:
            raise NetEmbedError("walk_length must be >= 2")
        if self.ridge < 0:
            raise NetEmbedError("ridge must be non-negative")
        for name in ("learning_rate", "epochs"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise NetEmbedError(f"{name} must be positive, got {v}")
        if self.solver not in ("auto", "dense", "iterative"):
            raise NetEmbedError(f"unknown eigen-solver {self.solver!r}")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# -- similarities -------------------------------------------------------------

SIMILARITY_KINDS = ("dot", "neg_euclidean", "cosine", "angular")


def similarity(u, v, kind: str = "dot") -> float:
    """Similarity of two vectors; ``angular`` is an angle, i.e. a dissimilarity."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionError(f"vector shapes differ: {u.shape} vs {v.shape}")
    if kind == "dot":
        return float(u @ v)
    if kind == "neg_euclidean":
        return -float(np.linalg.norm(u - v))
    if kind in ("cosine", "angular"):
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu == 0 or nv == 0:
            raise NetEmbedError(f"{kind} similarity is undefined for a zero vector")
        c = float(u @ v) / (nu * nv)
        if kind == "cosine":
            return c
        return math.acos(min(1.0, max(-1.0, c)))
    raise NetEmbedError(f"unknown similarity {kind!r}")


def pair_scores(Z: np.ndarray, pairs: np.ndarray, kind: str = "dot") -> np.ndarray:
    """Vectorised :func:`similarity` over node pairs, oriented so larger means
    more similar (angular distance is negated)."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    a, b = Z[pairs[:, 0]], Z[pairs[:, 1]]
    if kind == "dot":
        return np.einsum("ij,ij->i", a, b)
    if kind == "neg_euclidean":
        return -np.linalg.norm(a - b, axis=1)
    if kind in ("cosine", "angular"):
        na, nb = np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)
        if np.any(na == 0) or np.any(nb == 0):
            raise NetEmbedError(f"{kind} similarity is undefined for a zero vector")
        c = np.einsum("ij,ij->i", a, b) / (na * nb)
        return c if kind == "cosine" else -np.arccos(np.clip(c, -1.0, 1.0))
    raise NetEmbedError(f"unknown similarity {kind!r}")


# -- alignment ----------------------------------------------------------------

def column_signs(V: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """+1/-1 per column: the sign of its first entry above ``rel_tol * max|col|``."""
    V = np.asarray(V)
    signs = np.ones(V.shape[1])
    for k in range(V.shape[1]):
        col = V[:, k]
        scale = np.abs(col).max()
        if scale > 0 and col[np.flatnonzero(np.abs(col) > rel_tol * scale)[0]] < 0:
            signs[k] = -1.0
    return signs


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so that each one's first nonzero entry is positive."""
    return np.asarray(V, dtype=np.float64) * column_signs(V)


def procrustes_distance(A, B) -> float:
    """min over orthogonal Q and scale s of ||A - s B Q||_F / ||A||_F, after
    centring both columns."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise DimensionError(f"shapes differ: {A.shape} vs {B.shape}")
    A = A - A.mean(axis=0)
    B = B - B.mean(axis=0)
    na = np.linalg.norm(A)
    if na == 0:
        raise NetEmbedError("reference embedding has zero norm after centring")
    nb2 = float(np.sum(B * B))
    if nb2 == 0:
        return 1.0
    U, S, Vt = np.linalg.svd(B.T @ A)
    Q = U @ Vt
    s = S.sum() / nb2
    return float(np.linalg.norm(A - s * B @ Q) / na)


# -- word2vec text format -------------------------------------------------------

def write_word2vec(stream: TextIO, M: np.ndarray, names=None):
    n, d = M.shape
    stream.write(f"{n} {d}\n")
    for i in range(n):
        name = names[i] if names is not None else str(i)
        stream.write(name + " " + " ".join(f"{x:.17g}" for x in M[i]) + "\n")


def read_word2vec(stream: TextIO):
    """Return ``(names, matrix)``."""
    header = stream.readline().split()
    if len(header) != 2:
        raise NetEmbedError("word2vec header must be 'n d'")
    n, d = int(header[0]), int(header[1])
    names, rows = [], []
    for lineno, line in enumerate(stream, start=2):
        if not line.strip():
            continue
        tok = line.split()
        if len(tok) != d + 1:
            raise NetEmbedError(f"line {lineno}: expected {d + 1} fields, got {len(tok)}")
        names.append(tok[0])
        rows.append([float(x) for x in tok[1:]])
    if len(rows) != n:
        raise NetEmbedError(f"header announces {n} rows, found {len(rows)}")
    return names, np.array(rows, dtype=np.float64).reshape(n, d)


def context_path(path: str) -> str:
    return str(path) + ".context"
