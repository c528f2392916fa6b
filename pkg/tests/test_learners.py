"""Forest, boosting, naive Bayes and nearest-neighbour learners."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from povml.learners import (
    DecisionTree,
    GradientBoostedTrees,
    KNearestNeighbors,
    NaiveBayes,
    NotFittedError,
    RandomForest,
    euclidean,
    knn_predict,
    log_loss,
    make_model,
    model_from_json,
    model_to_json,
    softmax,
)
from povml.learners.naive_bayes import gaussian_pdf


def _toy(n=120, p=5, k=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    X[:, -1] = rng.integers(0, 2, n)  # one binary column
    score = X[:, 0] + 0.5 * X[:, 1] + X[:, -1] + rng.normal(scale=0.5, size=n)
    y = np.digitize(score, np.quantile(score, np.linspace(0, 1, k + 1)[1:-1])) + 1
    return X, y


# --- random forest -------------------------------------------------------

@given(st.integers(0, 2**16))
def test_degenerate_forest_equals_single_tree(seed):
    X, y = _toy(60, 4, 3, seed)
    forest = RandomForest(n_trees=1, bootstrap=False, features_per_split=None, seed=seed).fit(X, y)
    tree = DecisionTree().fit(X, y)
    Q = np.random.default_rng(seed + 1).normal(size=(40, 4))
    assert np.array_equal(forest.predict(X), tree.predict(X))
    assert np.array_equal(forest.predict_proba(Q), tree.predict_proba(Q))


def test_soft_vote_is_mean_of_tree_distributions():
    X, y = _toy()
    forest = RandomForest(n_trees=7, seed=2).fit(X, y)
    assert np.allclose(forest.predict_proba(X), forest.tree_probas(X).mean(axis=0))


def test_hard_vote_majority():
    X, y = _toy()
    forest = RandomForest(n_trees=3, voting="hard", seed=4).fit(X, y)
    per_tree = forest.tree_probas(X).argmax(axis=2)
    for i in range(len(X)):
        votes = np.bincount(per_tree[:, i], minlength=3)
        assert forest.predict(X[i:i + 1])[0] == forest.classes_[np.argmax(votes)]


def test_hard_vote_example_one_one_two():
    forest = RandomForest(n_trees=3, voting="hard")
    forest.classes_ = np.array([1, 2])
    forest.n_features_ = 1
    from povml.learners.tree import TreeArrays
    leaf = lambda dist: TreeArrays(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                                   np.array([dist]), np.array([0.0]))
    forest.trees_ = [leaf([1.0, 0.0]), leaf([0.6, 0.4]), leaf([0.0, 1.0])]
    assert forest.predict(np.zeros((1, 1))).tolist() == [1]


def test_forest_determinism_and_threads():
    X, y = _toy(200)
    a = RandomForest(n_trees=12, seed=9, threads=1).fit(X, y)
    b = RandomForest(n_trees=12, seed=9, threads=3).fit(X, y)
    assert model_to_json(a) == model_to_json(b)
    c = RandomForest(n_trees=12, seed=10).fit(X, y)
    assert model_to_json(a) != model_to_json(c)


def test_forest_learns_signal():
    X, y = _toy(400, seed=1)
    Xt, yt = _toy(400, seed=2)
    acc = np.mean(RandomForest(n_trees=40, seed=0).fit(X, y).predict(Xt) == yt)
    assert acc > 0.55  # chance is 1/3


def test_features_per_split_resolution():
    rf = RandomForest(features_per_split="sqrt")
    assert rf.resolved_features_per_split(125) == 11
    assert RandomForest(features_per_split=None).resolved_features_per_split(7) == 7
    with pytest.raises(ValueError):
        RandomForest(n_trees=0)


# --- gradient boosting ---------------------------------------------------

def test_first_iteration_residual_example():
    # K=2 with equal priors: initial scores equal, softmax [0.5, 0.5]
    assert softmax(np.zeros((1, 2))).tolist() == [[0.5, 0.5]]
    onehot_class0 = np.array([1.0, 0.0])
    assert (onehot_class0 - softmax(np.zeros((1, 2)))[0]).tolist() == [0.5, -0.5]


def test_leaf_value_is_one_newton_step():
    X = np.array([[0.0], [0.0], [1.0], [1.0], [1.0]])
    y = np.array([0, 1, 1, 1, 0])
    gbt = GradientBoostedTrees(iterations=1, learning_rate=1.0, max_depth=1).fit(X, y)
    k = 2
    prior = np.bincount(y) / len(y)
    p = np.tile(prior, (len(y), 1))
    for c, tree in enumerate(gbt.stages_[0]):
        r = (y == c) - p[:, c]
        for side in (X[:, 0] == 0, X[:, 0] == 1):
            want = (k - 1) / k * r[side].sum() / np.sum(np.abs(r[side]) * (1 - np.abs(r[side])))
            leaf = tree.apply(X[side])[0]
            assert tree.value[leaf] == pytest.approx(want, rel=1e-12)


@given(st.integers(0, 2**16))
def test_training_loss_non_increasing(seed):
    X, y = _toy(80, 4, 3, seed)
    gbt = GradientBoostedTrees(iterations=25, learning_rate=0.1, max_depth=3, seed=seed).fit(X, y)
    loss = np.array(gbt.train_loss_)
    assert len(loss) == 26
    assert np.all(np.diff(loss) <= 1e-12)


def test_zero_learning_rate_keeps_prior():
    X, y = _toy(50)
    gbt = GradientBoostedTrees(iterations=5, learning_rate=0.0).fit(X, y)
    prior = np.bincount(np.searchsorted(gbt.classes_, y)) / len(y)
    for proba in gbt.staged_predict_proba(X):
        assert np.allclose(proba, prior)


def test_train_loss_matches_log_loss():
    X, y = _toy(60)
    gbt = GradientBoostedTrees(iterations=4).fit(X, y)
    y_enc = np.searchsorted(gbt.classes_, y)
    assert gbt.train_loss_[-1] == pytest.approx(log_loss(y_enc, gbt.predict_proba(X)))


def test_gbt_subsample_and_round_trip():
    X, y = _toy(90)
    a = GradientBoostedTrees(iterations=6, subsample=0.7, seed=5).fit(X, y)
    again = model_from_json(model_to_json(a))
    assert np.array_equal(again.predict_proba(X), a.predict_proba(X))
    assert model_to_json(GradientBoostedTrees(iterations=6, subsample=0.7, seed=5).fit(X, y)) == model_to_json(a)


def test_gbt_parameter_checks():
    with pytest.raises(ValueError):
        GradientBoostedTrees(learning_rate=1.5)
    with pytest.raises(ValueError):
        GradientBoostedTrees(subsample=0.0)
    with pytest.raises(ValueError):
        GradientBoostedTrees().fit(np.ones((3, 1)), [1, 1, 1])


# --- naive Bayes ---------------------------------------------------------

def test_prior_only():
    nb = NaiveBayes().fit(np.zeros((3, 0)), np.array(["a", "a", "b"]))
    assert np.allclose(nb.predict_proba(np.zeros((1, 0))), [[2 / 3, 1 / 3]])


def test_gaussian_density_at_mode():
    assert gaussian_pdf(0.0, 0.0, 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert 1 / math.sqrt(2 * math.pi) == pytest.approx(0.3989422804014327, rel=1e-15)


def test_laplace_unseen_value_for_a_class():
    # feature value 1 never occurs with class 0 (n_0 = 3, V = 2)
    X = np.array([[0.0], [0.0], [0.0], [1.0], [0.0]])
    y = np.array([0, 0, 0, 1, 1])
    nb = NaiveBayes(categorical_features=[0], alpha=1.0).fit(X, y)
    lik = np.exp(nb.cat_log_lik_[0])
    assert lik[0, 1] == pytest.approx(1 / (3 + 2))
    assert np.all(lik > 0)


def test_weight_scale_invariance():
    X, y = _toy(80)
    w = np.random.default_rng(0).uniform(0.5, 2, len(y))
    a = NaiveBayes().fit(X, y, w).predict_proba(X)
    b = NaiveBayes().fit(X, y, 10 * w).predict_proba(X)
    assert np.allclose(a, b)


nb_data = st.integers(4, 40).flatmap(lambda n: st.tuples(
    arrays(np.float64, (n, 3), elements=st.floats(-50, 50, allow_nan=False, width=64)),
    arrays(np.int64, (n, 2), elements=st.integers(0, 2)),
    arrays(np.int64, (n,), elements=st.integers(0, 2)),
))


@given(nb_data, st.floats(0.01, 5))
def test_posteriors_sum_to_one_and_are_positive(data, alpha):
    num, cat, y = data
    X = np.hstack([num, cat])
    nb = NaiveBayes(categorical_features=[3, 4], alpha=alpha).fit(X, y)
    Q = np.hstack([num[::-1] * 3, cat + 1])  # includes category values never seen
    proba = nb.predict_proba(Q)
    assert np.allclose(proba.sum(axis=1), 1.0)
    for table in nb.cat_log_lik_:
        assert np.all(np.isfinite(table))


# --- nearest neighbours --------------------------------------------------

def test_distance_example():
    assert euclidean((0, 0), (3, 4)) == 5.0


def test_majority_of_three():
    X = np.array([[0.0], [1.0], [2.0], [10.0]])
    y = np.array([1, 1, 2, 2])
    assert knn_predict(KNearestNeighbors(k=3).fit(X, y), np.array([[0.5]])).tolist() == [1]


def test_distance_ties_go_to_lower_training_index():
    X = np.array([[1.0], [-1.0]])
    y = np.array([2, 1])
    # both at distance 1 from 0; k=1 takes training row 0
    assert KNearestNeighbors(k=1).fit(X, y).predict(np.array([[0.0]])).tolist() == [2]


def test_k_larger_than_training_set():
    with pytest.raises(ValueError, match="exceeds"):
        KNearestNeighbors(k=4).fit(np.ones((3, 1)), [0, 1, 0])


@given(st.integers(2, 30).flatmap(
    lambda n: st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=n, max_size=n, unique=True)),
    st.integers(0, 2**16))
def test_one_nearest_neighbour_recovers_training_labels(rows, seed):
    X = np.array(rows, dtype=float)
    y = np.random.default_rng(seed).integers(0, 4, len(X))
    assert np.array_equal(KNearestNeighbors(k=1).fit(X, y).predict(X), y)


# --- shared --------------------------------------------------------------

@pytest.mark.parametrize("kind", ["tree", "forest", "gbt", "nb", "knn"])
def test_registry_round_trip(kind):
    X, y = _toy(60)
    params = {"forest": {"n_trees": 5}, "gbt": {"iterations": 3}}.get(kind, {})
    model = make_model(kind, **params).fit(X, y)
    again = model_from_json(model_to_json(model))
    assert np.array_equal(again.predict_proba(X), model.predict_proba(X))
    assert np.allclose(model.predict_proba(X).sum(axis=1), 1.0)


def test_unfitted_and_shape_errors():
    with pytest.raises(NotFittedError):
        DecisionTree().predict(np.ones((1, 2)))
    model = DecisionTree().fit(np.ones((2, 2)), [0, 1])
    with pytest.raises(ValueError, match="expected 2 features"):
        model.predict(np.ones((1, 3)))
    with pytest.raises(ValueError, match="unknown model"):
        make_model("svm")
