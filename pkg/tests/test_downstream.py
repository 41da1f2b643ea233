import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netembed.downstream import (
    FeatureMatrix,
    Standardizer,
    _grow_tree,
    ari,
    auc,
    build_features,
    classification_metrics,
    cross_validate,
    fit_classifier,
    fit_logistic,
    fit_random_forest,
    kmeans,
    link_split,
    logistic_objective,
    predict,
    stratified_kfold,
)
from netembed.errors import DimensionError, NetEmbedError
from netembed.graph import NodeMetadata

from conftest import complete, fd_grad, random_graph, rel_err


def _blobs(n_per, centers, spread, seed):
    rng = np.random.default_rng(seed)
    X = np.vstack([c + spread * rng.standard_normal((n_per, len(c))) for c in centers])
    y = np.repeat(np.arange(len(centers)), n_per)
    return X, y


# -- features

def test_standardizer_constant_columns():
    X = np.array([[1.0, 5.0], [3.0, 5.0]])
    s = Standardizer.fit(X)
    assert s.transform(X).tolist() == [[-1.0, 0.0], [1.0, 0.0]]
    with pytest.raises(DimensionError):
        s.transform(np.zeros((2, 3)))


def test_standardization_uses_train_rows_only():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    train, test = np.arange(30), np.arange(30, 40)
    a_tr, a_te = FeatureMatrix(X, 3).split(train, test)
    X2 = X.copy()
    X2[test] = 1e6
    b_tr, _ = FeatureMatrix(X2, 3).split(train, test)
    assert np.array_equal(a_tr, b_tr)
    s = Standardizer.fit(X[train])
    assert np.allclose(a_te, (X[test] - X[train].mean(0)) / X[train].std(0))
    assert np.array_equal(Standardizer.fit(X2[train]).mean, s.mean)


def test_build_features_concatenates_covariates():
    Z = np.ones((4, 2))
    meta = NodeMetadata(labels=[0, 1, 0, 1], covariates=np.arange(8.0).reshape(4, 2))
    f = build_features(Z, meta)
    assert f.shape == (4, 4) and f.embedding_columns == 2
    assert build_features(Z, meta, use_covariates=False).shape == (4, 2)
    with pytest.raises(DimensionError):
        build_features(np.ones((3, 2)), meta)
    with pytest.raises(NetEmbedError):
        FeatureMatrix(np.array([[np.inf]]), 1)


# -- logistic regression

def test_logistic_separable_toy():
    X = np.array([[0, 0], [0, 1], [1, 0], [3, 3], [3, 4], [4, 3]], dtype=float)
    y = np.array([0, 0, 0, 1, 1, 1])
    model = fit_logistic(X, y)
    pred, proba = predict(model, X)
    assert np.array_equal(pred, y)
    assert np.allclose(proba.sum(axis=1), 1.0, atol=1e-10)


def test_logistic_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n, p, C = rng.integers(3, 12), rng.integers(1, 5), rng.integers(2, 5)
        X = rng.normal(size=(n, p))
        Y = np.eye(C)[rng.integers(0, C, n)]
        W, b, l2 = rng.normal(size=(p, C)), rng.normal(size=C), rng.uniform(0, 1)
        _, gW, gb = logistic_objective(W, b, X, Y, l2)
        assert rel_err(gW, fd_grad(lambda w: logistic_objective(w, b, X, Y, l2)[0], W)) < 1e-6
        assert rel_err(gb, fd_grad(lambda v: logistic_objective(W, v, X, Y, l2)[0], b)) < 1e-6


def test_logistic_ridge_domination_gives_priors():
    X, y = _blobs(30, [[0, 0], [3, 3]], 1.0, 2)
    y[:10] = 1  # priors 1/3 and 2/3
    model = fit_logistic(X, y, l2=1e9)
    assert np.linalg.norm(model.weights) < 1e-3
    _, proba = predict(model, X)
    assert np.allclose(proba.mean(axis=0), [20 / 60, 40 / 60], atol=1e-3)


def test_logistic_objective_monotone_and_converges():
    X, y = _blobs(25, [[0, 0], [2, 0], [0, 2]], 1.0, 3)
    model = fit_logistic(X, y)
    trace = np.array(model.info["objective_trace"])
    assert np.all(np.diff(trace) <= 0)
    assert model.info["converged"]
    capped = fit_logistic(X, y, max_iter=3)
    assert not capped.info["converged"] and capped.info["iterations"] == 3


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_logistic_objective_never_increases(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 3))
    y = rng.integers(0, 3, 20)
    y[:3] = [0, 1, 2]
    trace = fit_logistic(X, y, max_iter=200).info["objective_trace"]
    assert all(b <= a for a, b in zip(trace, trace[1:]))


def test_zero_weight_logistic_is_uniform():
    model = fit_logistic(np.zeros((4, 2)), [0, 1, 2, 0], l2=1.0, max_iter=1)
    model = type(model)("logistic", model.classes, 2, weights=np.zeros((2, 3)), bias=np.zeros(3))
    _, proba = predict(model, np.random.default_rng(0).normal(size=(5, 2)))
    assert np.allclose(proba, 1 / 3)


def test_classifiers_reject_single_class_and_width_mismatch():
    X = np.zeros((4, 2))
    for kind in ("logistic", "random_forest"):
        with pytest.raises(NetEmbedError):
            fit_classifier(kind, X, [1, 1, 1, 1])
    model = fit_logistic(np.eye(2), [0, 1])
    with pytest.raises(DimensionError):
        predict(model, np.zeros((2, 3)))
    with pytest.raises(NetEmbedError):
        fit_classifier("svm", X, [0, 1, 0, 1])


# -- random forest

def test_single_tree_shatters_training_data():
    X, y = _blobs(20, [[0, 0], [1, 1], [0, 1]], 0.6, 4)
    model = fit_random_forest(X, y, trees=1, bootstrap=False, max_features=2)
    pred, proba = predict(model, X)
    assert np.array_equal(pred, y)
    assert np.all(proba.max(axis=1) == 1.0)


def test_pure_node_grows_single_leaf():
    X = np.random.default_rng(0).normal(size=(10, 3))
    tree = _grow_tree(X, np.zeros(10, dtype=np.int64), 2, 1, None, 1, np.random.default_rng(0))
    assert tree.num_leaves == 1
    assert np.all(tree.predict(X) == 0)


def test_forest_xor_generalises():
    rng = np.random.default_rng(5)
    X = rng.uniform(-1, 1, size=(400, 2))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
    model = fit_random_forest(X, y, trees=100, seed=1)
    g = np.linspace(-0.95, 0.95, 20)
    G = np.array([(a, b) for a in g for b in g])
    truth = ((G[:, 0] > 0) ^ (G[:, 1] > 0)).astype(int)
    pred, proba = predict(model, G)
    assert np.mean(pred == truth) >= 0.95
    assert np.allclose(proba.sum(axis=1), 1.0)
    assert np.allclose(proba * 100, np.round(proba * 100))


def test_forest_votes_tie_to_smaller_class():
    X = np.array([[0.0], [1.0]])
    a = fit_random_forest(X, [0, 1], trees=1, bootstrap=False)
    b = fit_random_forest(X, [1, 0], trees=1, bootstrap=False)
    both = type(a)("random_forest", a.classes, 1, trees=a.trees + b.trees)
    pred, proba = predict(both, X)
    assert np.allclose(proba, 0.5) and pred.tolist() == [0, 0]


def test_forest_reproducible_given_seed():
    X, y = _blobs(20, [[0, 0], [1, 1]], 1.0, 6)
    _, p1 = predict(fit_random_forest(X, y, trees=10, seed=3), X)
    _, p2 = predict(fit_random_forest(X, y, trees=10, seed=3), X)
    assert np.array_equal(p1, p2)


# -- k-means

def test_kmeans_far_clouds_recovered():
    X, y = _blobs(30, [[0, 0], [1000, 1000]], 1.0, 7)
    km = kmeans(X, 2, seed=0)
    assert ari(km.labels, y) == 1.0


def test_kmeans_edge_cases():
    X = np.random.default_rng(8).normal(size=(12, 3))
    one = kmeans(X, 1, seed=0)
    assert np.allclose(one.centers[0], X.mean(axis=0))
    assert one.inertia == pytest.approx(X.var(axis=0).sum() * len(X))
    assert kmeans(X, 12, seed=0).inertia == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(NetEmbedError):
        kmeans(X, 13, seed=0)


# -- stratified folds

def test_stratified_examples():
    y = np.array([0] * 10 + [1] * 10)
    folds = stratified_kfold(y, 5, seed=0)
    for f in folds:
        assert np.bincount(y[f]).tolist() == [2, 2]
    allidx = np.concatenate(folds)
    assert sorted(allidx.tolist()) == list(range(20))
    with pytest.raises(NetEmbedError, match="'c'"):
        stratified_kfold(np.array(["a"] * 10 + ["c"] * 3), 5)


def test_stratified_balance_on_random_labels():
    rng = np.random.default_rng(9)
    for t in range(1000):
        k = int(rng.integers(2, 7))
        C = int(rng.integers(1, 5))
        y = np.concatenate([np.full(k, c) for c in range(C)]
                           + [rng.integers(0, C, rng.integers(0, 40))])
        folds = stratified_kfold(y, k, seed=t)
        assert sorted(np.concatenate(folds).tolist()) == list(range(len(y)))
        per_class = np.array([np.bincount(y[f], minlength=C) for f in folds])
        assert np.all(per_class.max(axis=0) - per_class.min(axis=0) <= 1)


# -- link prediction splits

def test_link_split_k4_counts():
    s = link_split(complete(4), 0.5, neg_ratio=0.0, seed=0)
    assert len(s.positives) == 3 and s.train.num_edges == 3 and len(s.negatives) == 0
    with pytest.raises(NetEmbedError):
        link_split(complete(4), 0.5, neg_ratio=1.0, seed=0)


def test_link_split_empty_test_set():
    g = random_graph(10, 0.3, 1)
    s = link_split(g, 1e-6, seed=0)
    assert len(s.positives) == 0 and len(s.negatives) == 0
    assert np.array_equal(s.train.indices, g.indices)


@given(st.integers(5, 30), st.floats(0.1, 0.6), st.floats(0.05, 0.9), st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_link_split_disjointness(n, p, frac, seed):
    g = random_graph(n, p, seed)
    if g.num_edges == 0:
        return
    non_edges = n * (n - 1) // 2 - g.num_edges
    k = int(np.floor(frac * g.num_edges + 1e-9))
    if k > non_edges:
        return
    s = link_split(g, frac, 1.0, seed)
    assert len(s.positives) == k == len(s.negatives)
    assert s.train.num_edges == g.num_edges - k
    for i, j in s.positives:
        assert i < j and g.has_edge(i, j) and not s.train.has_edge(i, j)
    for i, j in s.negatives:
        assert i < j and not g.has_edge(i, j)
    assert len({tuple(x) for x in s.negatives.tolist()}) == len(s.negatives)


# -- metrics

def test_auc_examples():
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0
    assert auc([0.5, 0.5], [0, 1]) == 0.5
    with pytest.raises(NetEmbedError):
        auc([0.1, 0.2], [1, 1])


def test_auc_random_scores():
    rng = np.random.default_rng(10)
    s = rng.random(10_000)
    lab = rng.integers(0, 2, 10_000)
    assert abs(auc(s, lab) - 0.5) < 0.02


@given(st.lists(st.integers(-50, 50), min_size=2, max_size=60), st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_auc_monotone_invariance(scores, seed):
    s = np.array(scores, dtype=float)
    lab = np.random.default_rng(seed).integers(0, 2, len(s))
    lab[0], lab[1] = 0, 1
    base = auc(s, lab)
    for f in (lambda x: 3 * x - 7, np.exp, lambda x: x ** 3, lambda x: np.arctan(x / 10)):
        assert auc(f(s), lab) == pytest.approx(base, abs=1e-12)


def test_classification_metric_examples():
    y = np.array([0, 1, 2, 1])
    assert classification_metrics(y, y) == {"accuracy": 1.0, "macro_f1": 1.0, "micro_f1": 1.0}
    true = np.array([1, 1, 0, 0])
    m = classification_metrics(np.ones(4, dtype=int), true)
    assert m["accuracy"] == 0.5
    # positive class F1 = 2/3, negative class F1 = 0
    assert m["macro_f1"] == pytest.approx(1 / 3)
    with pytest.raises(NetEmbedError):
        classification_metrics([], [])


@given(st.lists(st.integers(0, 4), min_size=1, max_size=50), st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_metrics_relabeling_and_micro_equals_accuracy(true, seed):
    rng = np.random.default_rng(seed)
    true = np.array(true)
    pred = rng.integers(0, 5, len(true))
    m = classification_metrics(pred, true)
    assert m["micro_f1"] == pytest.approx(m["accuracy"], abs=1e-12)
    perm = rng.permutation(5) + 10
    m2 = classification_metrics(perm[pred], perm[true])
    for key in m:
        assert m2[key] == pytest.approx(m[key], abs=1e-12)


def test_ari_examples():
    a = np.array([0, 0, 1, 1, 2, 2])
    assert ari(a, np.array([5, 5, 3, 3, 9, 9])) == 1.0
    n = 8
    assert ari(np.arange(n), np.zeros(n)) == 0.0
    with pytest.raises(NetEmbedError):
        ari([], [])


def test_ari_known_value():
    # contingency [[2,1],[0,3]]: pair counts index 1+3, rows 3+3, cols 1+6 of 15
    a = [0, 0, 0, 1, 1, 1]
    b = [0, 0, 1, 1, 1, 1]
    index, sa, sb, total = 1 + 3, 3 + 3, 1 + 6, 15
    expect = (index - sa * sb / total) / (0.5 * (sa + sb) - sa * sb / total)
    assert ari(a, b) == pytest.approx(expect)


def test_ari_random_partitions():
    rng = np.random.default_rng(11)
    a = rng.integers(0, 5, 10_000)
    b = rng.integers(0, 5, 10_000)
    assert abs(ari(a, b)) < 0.01


@given(st.lists(st.integers(0, 5), min_size=2, max_size=40), st.integers(0, 1000))
@settings(max_examples=100, deadline=None)
def test_ari_permutation_invariance(a, seed):
    rng = np.random.default_rng(seed)
    a = np.array(a)
    b = rng.integers(0, 4, len(a))
    perm = rng.permutation(6) * 7
    assert ari(perm[a], b) == pytest.approx(ari(a, b), abs=1e-12)
    assert ari(a, b) == pytest.approx(ari(b, a), abs=1e-12)


# -- cross-validation

def test_cross_validate_blobs():
    X, y = _blobs(25, [[0, 0], [5, 5], [0, 5]], 0.5, 12)
    feats = FeatureMatrix(X, 2)
    for model in ("logistic", "random_forest"):
        res = cross_validate(feats, y, model, k=5, seed=0,
                             model_args={"trees": 20} if model == "random_forest" else None)
        assert res["accuracy"] > 0.95 and len(res["folds"]) == 5 and res["converged"]
    a = cross_validate(feats, y, "random_forest", 5, 1, model_args={"trees": 5})
    b = cross_validate(feats, y, "random_forest", 5, 1, model_args={"trees": 5})
    assert a == b
