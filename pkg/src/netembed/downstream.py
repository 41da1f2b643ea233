"""Downstream models and scores for judging embeddings.

Classifiers (multinomial logistic, random forest), k-means, stratified CV
folds, link-prediction hold-out splits, AUC, F1 and the adjusted Rand index.
Everything is numpy; fitted models are immutable and safe to share between
threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp, softmax
from scipy.stats import rankdata

from ._rng import derive_seed, generator
from .errors import DimensionError, DirectedGraphError, NetEmbedError
from .graph import Graph, NodeMetadata, _decode_pairs


# ---------------------------------------------------------------- features

@dataclass(frozen=True)
class Standardizer:
    """Per-column centring and scaling fitted on training rows only."""
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise DimensionError("need a non-empty 2-D matrix to standardize")
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        # constant columns are centred but left unscaled
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.mean):
            raise DimensionError(f"expected {len(self.mean)} columns, got {np.shape(X)}")
        return (X - self.mean) / self.scale


@dataclass(frozen=True)
class FeatureMatrix:
    """Embedding columns, optionally followed by node covariates."""
    values: np.ndarray
    embedding_columns: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DimensionError("feature matrix must be 2-D")
        if not np.all(np.isfinite(v)):
            raise NetEmbedError("feature matrix has non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    def split(self, train: np.ndarray, test: np.ndarray, standardize: bool = True):
        """Train/test blocks, standardized with statistics of the train rows."""
        Xtr, Xte = self.values[train], self.values[test]
        if not standardize:
            return Xtr, Xte
        s = Standardizer.fit(Xtr)
        return s.transform(Xtr), s.transform(Xte)


def build_features(embedding: np.ndarray, meta: Optional[NodeMetadata] = None,
                   use_covariates: bool = True) -> FeatureMatrix:
    """Concatenate embedding rows with covariates when present and enabled."""
    Z = np.asarray(embedding, dtype=np.float64)
    cols = [Z]
    if use_covariates and meta is not None and meta.covariates is not None:
        C = np.asarray(meta.covariates, dtype=np.float64)
        if C.shape[0] != Z.shape[0]:
            raise DimensionError(f"{C.shape[0]} covariate rows for {Z.shape[0]} embedding rows")
        cols.append(C.reshape(Z.shape[0], -1))
    return FeatureMatrix(np.hstack(cols), Z.shape[1])


# ------------------------------------------------------------- classifiers

@dataclass(frozen=True)
class Tree:
    """Flat CART tree; leaves have ``feature == -1`` and carry class counts."""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    def leaf_of(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active[idx] = self.feature[node[idx]] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        # argmax takes the first maximum, so ties go to the smaller class
        return np.argmax(self.counts[self.leaf_of(X)], axis=1)

    @property
    def num_leaves(self) -> int:
        return int(np.sum(self.feature < 0))


@dataclass(frozen=True)
class ClassifierModel:
    kind: str
    classes: np.ndarray
    n_features: int
    weights: Optional[np.ndarray] = None
    bias: Optional[np.ndarray] = None
    trees: tuple = ()
    info: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return len(self.classes)


def _class_index(y):
    y = np.asarray(y)
    if y.ndim != 1 or len(y) == 0:
        raise NetEmbedError("labels must be a non-empty 1-D array")
    classes, idx = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise NetEmbedError(f"need at least two classes, got only {classes[0]!r}")
    return classes, idx


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionError(f"X has shape {X.shape} but there are {len(y)} labels")
    if not np.all(np.isfinite(X)):
        raise NetEmbedError("features contain non-finite values")
    return X


def logistic_objective(W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray, l2: float):
    """Mean cross-entropy plus (l2/2)||W||^2 and its gradients.

    ``Y`` is one-hot (n x C).  The bias is not penalised.  Returns
    ``(objective, grad_W, grad_b)``.
    """
    n = X.shape[0]
    logits = X @ W + b
    lse = logsumexp(logits, axis=1)
    obj = float(np.sum(lse - np.sum(Y * logits, axis=1)) / n + 0.5 * l2 * np.sum(W * W))
    P = np.exp(logits - lse[:, None])
    R = (P - Y) / n
    return obj, X.T @ R + l2 * W, R.sum(axis=0)


def fit_logistic(X, y, l2: float = 1e-3, max_iter: int = 2000, tol: float = 1e-6) -> ClassifierModel:
    """Multinomial logistic regression by full-batch gradient descent.

    The weight direction is scaled by 1/(1 + l2) so a large penalty does not
    force tiny steps on the unpenalised bias.  Steps are found by Armijo
    backtracking, so the objective never increases between accepted
    iterates.  ``info['converged']`` says whether the gradient infinity-norm
    fell below ``tol`` before ``max_iter``.
    """
    if l2 < 0 or max_iter < 1 or tol <= 0:
        raise NetEmbedError("need l2 >= 0, max_iter >= 1 and tol > 0")
    classes, yi = _class_index(y)
    X = _check_xy(X, yi)
    n, p = X.shape
    C = len(classes)
    Y = np.zeros((n, C))
    Y[np.arange(n), yi] = 1.0
    W = np.zeros((p, C))
    b = np.zeros(C)
    obj, gW, gb = logistic_objective(W, b, X, Y, l2)
    trace = [obj]
    wscale = 1.0 / (1.0 + l2)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gmax = max(np.abs(gW).max(initial=0.0), np.abs(gb).max())
        if gmax < tol:
            converged = True
            break
        dW = gW * wscale
        slope = float(np.sum(gW * dW) + np.sum(gb * gb))
        while True:
            Wn, bn = W - step * dW, b - step * gb
            obj_n, gWn, gbn = logistic_objective(Wn, bn, X, Y, l2)
            if obj_n <= obj - 1e-4 * step * slope or step < 1e-12:
                break
            step *= 0.5
        if obj_n > obj:
            break
        W, b, obj, gW, gb = Wn, bn, obj_n, gWn, gbn
        trace.append(obj)
        step *= 2.0
    else:
        gmax = max(np.abs(gW).max(initial=0.0), np.abs(gb).max())
        converged = gmax < tol
    return ClassifierModel("logistic", classes, p, weights=W, bias=b,
                           info={"converged": converged, "iterations": it,
                                 "objective_trace": trace, "l2": l2})


def _best_split(X, yi, C, features, min_leaf):
    # scan candidate features in the given order; first strict improvement wins
    n = len(yi)
    onehot = np.zeros((n, C))
    onehot[np.arange(n), yi] = 1.0
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left = np.cumsum(onehot[order], axis=0)[:-1]
        nl = np.arange(1, n, dtype=np.float64)
        nr = n - nl
        right = left[-1] + onehot[order[-1]] - left
        valid = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        gini_l = 1.0 - np.sum(left * left, axis=1) / (nl * nl)
        gini_r = 1.0 - np.sum(right * right, axis=1) / (nr * nr)
        impurity = np.where(valid, (nl * gini_l + nr * gini_r) / n, np.inf)
        k = int(np.argmin(impurity))
        if best is None or impurity[k] < best[0]:
            best = (impurity[k], f, 0.5 * (xs[k] + xs[k + 1]))
    return best


def _grow_tree(X, yi, C, max_features, max_depth, min_leaf, rng) -> Tree:
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(yi[rows], minlength=C))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(yi))), np.arange(len(yi)), 0)]
    p = X.shape[1]
    while stack:
        node, rows, depth = stack.pop()
        c = counts[node]
        if np.count_nonzero(c) <= 1 or len(rows) < 2 * min_leaf:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        perm = rng.permutation(p)
        split = _best_split(X[rows], yi[rows], C, perm[:max_features], min_leaf)
        if split is None and max_features < p:
            # as in common CART implementations, keep looking past the
            # sampled subset when it holds no usable split
            split = _best_split(X[rows], yi[rows], C, perm[max_features:], min_leaf)
        if split is None or split[0] >= 1.0 - np.sum((c / c.sum()) ** 2):
            continue
        _, f, t = split
        mask = X[rows, f] <= t
        lrows, rrows = rows[mask], rows[~mask]
        feature[node], threshold[node] = int(f), float(t)
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(counts, dtype=np.int64).reshape(-1, C))


def fit_random_forest(X, y, trees: int = 100, max_depth: Optional[int] = None,
                      min_leaf: int = 1, seed: int = 0, bootstrap: bool = True,
                      max_features: Optional[int] = None) -> ClassifierModel:
    """Bagged CART trees with Gini splits over random sqrt(p) feature subsets."""
    if trees < 1 or min_leaf < 1 or (max_depth is not None and max_depth < 0):
        raise NetEmbedError("need trees >= 1, min_leaf >= 1 and max_depth >= 0")
    classes, yi = _class_index(y)
    X = _check_xy(X, yi)
    n, p = X.shape
    m = max_features or max(1, int(np.sqrt(p)))
    m = min(m, p)
    rng = generator(seed, "forest")
    grown = []
    for _ in range(trees):
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        grown.append(_grow_tree(X[rows], yi[rows], len(classes), m, max_depth, min_leaf, rng))
    return ClassifierModel("random_forest", classes, p, trees=tuple(grown),
                           info={"max_features": m, "bootstrap": bootstrap,
                                 "max_depth": max_depth, "min_leaf": min_leaf})


def predict(model: ClassifierModel, X):
    """Predicted labels and class probabilities (rows sum to 1).

    Forest probabilities are vote shares; the vote winner breaks ties toward
    the smaller class id.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionError(f"model expects {model.n_features} features, got shape {X.shape}")
    C = model.num_classes
    if model.kind == "logistic":
        proba = softmax(X @ model.weights + model.bias, axis=1)
    elif model.kind == "random_forest":
        votes = np.zeros((X.shape[0], C))
        for t in model.trees:
            votes[np.arange(X.shape[0]), t.predict(X)] += 1.0
        proba = votes / len(model.trees)
    else:
        raise NetEmbedError(f"unknown model kind {model.kind!r}")
    return model.classes[np.argmax(proba, axis=1)], proba


DOWNSTREAM_MODELS = ("logistic", "random_forest")


def fit_classifier(kind: str, X, y, seed: int = 0, **kw) -> ClassifierModel:
    if kind == "logistic":
        return fit_logistic(X, y, **kw)
    if kind == "random_forest":
        return fit_random_forest(X, y, seed=seed, **kw)
    raise NetEmbedError(f"unknown downstream model {kind!r}; valid: {', '.join(DOWNSTREAM_MODELS)}")


# ----------------------------------------------------------------- k-means

class KMeansResult(NamedTuple):
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    iterations: int


def _sq_dists(X, centers):
    d = (np.einsum("ij,ij->i", X, X)[:, None] - 2.0 * X @ centers.T
         + np.einsum("ij,ij->i", centers, centers)[None, :])
    return np.maximum(d, 0.0)


def _plusplus(X, k, rng):
    n = len(X)
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        i = int(rng.choice(n, p=d2 / total)) if total > 0 else int(rng.integers(n))
        centers[c] = X[i]
        d2 = np.minimum(d2, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def _lloyd(X, centers, max_iter):
    labels = None
    it = 0
    for it in range(1, max_iter + 1):
        new = np.argmin(_sq_dists(X, centers), axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(len(centers)):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
            else:
                # refill an empty cluster with the point farthest from its centre
                far = int(np.argmax(np.sum((X - centers[labels]) ** 2, axis=1)))
                centers[c] = X[far]
                labels[far] = c
    inertia = float(np.sum((X - centers[labels]) ** 2))
    return labels, centers, inertia, it


def kmeans(X, k: int, seed: int = 0, max_iter: int = 300, restarts: int = 10) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds; best of ``restarts`` by inertia."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionError("kmeans needs a non-empty 2-D matrix")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise NetEmbedError(f"need 1 <= k <= n, got k={k}, n={n}")
    if restarts < 1 or max_iter < 1:
        raise NetEmbedError("restarts and max_iter must be positive")
    rng = generator(seed, "kmeans")
    best = None
    for _ in range(restarts):
        res = _lloyd(X, _plusplus(X, k, rng), max_iter)
        if best is None or res[2] < best[2]:
            best = res
    return KMeansResult(*best)


# ------------------------------------------------------------------ splits

def stratified_kfold(y, k: int, seed: int = 0) -> List[np.ndarray]:
    """k disjoint folds with every class spread as evenly as possible.

    Each class is shuffled and dealt round-robin; the dealing position carries
    over between classes so fold sizes also differ by at most one.
    """
    y = np.asarray(y)
    if k < 2:
        raise NetEmbedError(f"need k >= 2 folds, got {k}")
    classes, idx, counts = np.unique(y, return_inverse=True, return_counts=True)
    small = classes[counts < k]
    if len(small):
        c = small[0]
        raise NetEmbedError(f"class {c!r} has {int(counts[classes == c][0])} members, fewer than k={k}")
    rng = generator(seed, "kfold")
    folds = [[] for _ in range(k)]
    pos = 0
    for c in range(len(classes)):
        members = rng.permutation(np.flatnonzero(idx == c))
        for m in members:
            folds[pos % k].append(m)
            pos += 1
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


class LinkSplit(NamedTuple):
    train: Graph
    positives: np.ndarray
    negatives: np.ndarray


def link_split(g: Graph, test_fraction: float, neg_ratio: float = 1.0, seed: int = 0) -> LinkSplit:
    """Hold out floor(test_fraction*|E|) edges and sample uniform non-edges.

    Pairs are (i, j) rows with i < j.  The training graph keeps all n nodes
    and may be disconnected; callers record that if it matters.
    """
    if g.directed:
        raise DirectedGraphError("link_split needs an undirected graph")
    if not 0.0 < test_fraction < 1.0:
        raise NetEmbedError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if neg_ratio < 0:
        raise NetEmbedError("neg_ratio must be non-negative")
    src, dst, w = g.edges()
    m = len(src)
    k = int(np.floor(test_fraction * m + 1e-9))
    n_neg = int(round(neg_ratio * k))
    n = g.n
    total = n * (n - 1) // 2
    if n_neg > total - m:
        raise NetEmbedError(f"need {n_neg} non-edges but only {total - m} exist")
    rng = generator(seed, "link-split")
    held = np.sort(rng.choice(m, size=k, replace=False)) if k else np.zeros(0, dtype=np.int64)
    keep = np.ones(m, dtype=bool)
    keep[held] = False
    train = g.with_edges(src[keep], dst[keep], w[keep])
    positives = np.stack([src[held], dst[held]], axis=1).astype(np.int64)

    existing = set((src * n + dst).tolist())
    chosen, seen = [], set()
    while len(chosen) < n_neg:
        batch = rng.integers(0, total, size=max(2 * (n_neg - len(chosen)), 16))
        bi, bj = _decode_pairs(batch.astype(np.int64), n, False)
        for code in (bi * n + bj).tolist():
            if code in existing or code in seen:
                continue
            seen.add(code)
            chosen.append(code)
            if len(chosen) == n_neg:
                break
    codes = np.array(chosen, dtype=np.int64)
    negatives = np.stack([codes // n, codes % n], axis=1) if n_neg else np.zeros((0, 2), dtype=np.int64)
    return LinkSplit(train, positives, negatives)


# ----------------------------------------------------------------- metrics

def auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney statistic (ties count 1/2)."""
    s = np.asarray(scores, dtype=np.float64)
    lab = np.asarray(labels).astype(bool)
    if s.shape != lab.shape or s.ndim != 1:
        raise DimensionError("scores and labels must be 1-D and of equal length")
    n_pos = int(lab.sum())
    n_neg = len(lab) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise NetEmbedError("AUC needs both positive and negative labels")
    ranks = rankdata(s)
    u = ranks[lab].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def classification_metrics(pred, true) -> dict:
    """Accuracy, macro-F1 over classes seen in either vector, and micro-F1."""
    pred = np.asarray(pred)
    true = np.asarray(true)
    if pred.shape != true.shape or pred.ndim != 1:
        raise DimensionError("pred and true must be 1-D and of equal length")
    if len(true) == 0:
        raise NetEmbedError("cannot score empty predictions")
    classes = np.union1d(pred, true)
    f1 = []
    tp_all = fp_all = fn_all = 0
    for c in classes:
        tp = int(np.sum((pred == c) & (true == c)))
        fp = int(np.sum((pred == c) & (true != c)))
        fn = int(np.sum((pred != c) & (true == c)))
        tp_all, fp_all, fn_all = tp_all + tp, fp_all + fp, fn_all + fn
        f1.append(2 * tp / (2 * tp + fp + fn) if tp else 0.0)
    micro = 2 * tp_all / (2 * tp_all + fp_all + fn_all) if tp_all else 0.0
    return {"accuracy": float(np.mean(pred == true)),
            "macro_f1": float(np.mean(f1)),
            "micro_f1": float(micro)}


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2.0


def ari(labels_a, labels_b) -> float:
    """Adjusted Rand index from the pair-counting contingency table."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError("label vectors must be 1-D and of equal length")
    if len(a) == 0:
        raise NetEmbedError("cannot compare empty partitions")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1.0)
    index = _comb2(table).sum()
    sa = _comb2(table.sum(axis=1)).sum()
    sb = _comb2(table.sum(axis=0)).sum()
    expected = sa * sb / _comb2(len(a)) if len(a) > 1 else 0.0
    top = 0.5 * (sa + sb)
    if top == expected:
        # both partitions trivial in the same way
        return 1.0 if sa == sb else 0.0
    return float((index - expected) / (top - expected))


def cross_validate(features: FeatureMatrix, y, model: str, k: int = 5, seed: int = 0,
                   standardize: bool = True, model_args: Optional[dict] = None) -> dict:
    """Stratified k-fold scores for one downstream model, averaged over folds.

    Also returns the per-fold metrics and whether every fit converged.
    """
    y = np.asarray(y)
    folds = stratified_kfold(y, k, seed)
    per_fold = []
    converged = True
    for f, test in enumerate(folds):
        train = np.setdiff1d(np.arange(len(y)), test, assume_unique=True)
        Xtr, Xte = features.split(train, test, standardize)
        fitted = fit_classifier(model, Xtr, y[train], seed=derive_seed(seed, "cv-model", f),
                                **(model_args or {}))
        converged = converged and fitted.info.get("converged", True)
        pred, _ = predict(fitted, Xte)
        per_fold.append(classification_metrics(pred, y[test]))
    out = {key: float(np.mean([m[key] for m in per_fold])) for key in per_fold[0]}
    out["folds"] = per_fold
    out["converged"] = converged
    return out
