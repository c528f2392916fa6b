"""CART classification tree with Gini impurity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .base import Classifier


def gini(class_counts) -> float:
    """1 - sum(p_c^2) over (possibly weighted) class counts."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if counts.size == 0 or np.any(counts < 0) or counts.sum() <= 0:
        raise ValueError("gini needs non-negative counts, not all zero")
    return float(K.gini_weighted(counts))


def binary_columns(X: np.ndarray) -> np.ndarray:
    """Columns whose values are all 0 or 1; these split only at 0.5."""
    return np.all((X == 0.0) | (X == 1.0), axis=0)


def feature_ranks(X: np.ndarray) -> np.ndarray:
    """Feature-major dense ranks: equal values share a rank, order is kept."""
    X = np.asarray(X, dtype=np.float64)
    R = np.empty((X.shape[1], X.shape[0]), dtype=np.int64)
    for j in range(X.shape[1]):
        R[j] = np.unique(X[:, j], return_inverse=True)[1].ravel()
    return R


def best_split(features, labels, weights=None, candidate_features=None, min_samples_leaf=1):
    """Best Gini split of a node, or None when no split lowers impurity.

    Returns ``(feature, threshold, decrease)`` where ``decrease`` is the
    parent impurity minus the weight-averaged child impurities.  Ties go to
    the lower feature index, then the lower threshold.
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    classes, y = np.unique(np.asarray(labels), return_inverse=True)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=np.float64)
    feats = np.arange(X.shape[1]) if candidate_features is None else np.asarray(candidate_features)
    if len(y) == 0:
        return None
    best = K.best_split_kernel(np.ascontiguousarray(X.T), feature_ranks(X), y.astype(np.int64), w,
                               np.arange(len(y)), len(classes),
                               np.sort(feats).astype(np.int64), binary_columns(X), min_samples_leaf)
    if best[1] < 0:
        return None
    return int(best[1]), float(best[2]), float(best[0])


@dataclass
class TreeArrays:
    """Flat tree: node i is a leaf iff feature[i] == -1.

    Internal nodes send x left iff x[feature] <= threshold.  ``value`` holds
    the weighted class distribution (or, for regression trees, the leaf
    output) and ``improvement`` the weighted impurity decrease of a split.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    improvement: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) if self.node_count else 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        return K.apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def node(self, i: int) -> dict:
        if self.feature[i] < 0:
            return {"leaf": True, "value": np.atleast_1d(self.value[i]).tolist()}
        return {
            "leaf": False,
            "feature": int(self.feature[i]),
            "threshold": float(self.threshold[i]),
            "left": int(self.left[i]),
            "right": int(self.right[i]),
        }

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "improvement": self.improvement.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeArrays":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64),
            np.asarray(d["improvement"], dtype=np.float64),
        )

    def feature_gains(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        internal = self.feature >= 0
        np.add.at(out, self.feature[internal], self.improvement[internal])
        return out


def grow_classification_tree(X, y_enc, w, samples, n_classes, *, max_depth=None,
                             min_samples_split=2, min_samples_leaf=1,
                             features_per_split=None, seed=0, is_binary=None, Xt=None,
                             ranks=None) -> TreeArrays:
    """Grow one CART tree on rows ``samples`` (duplicates allowed) of X.

    ``Xt`` (C-contiguous ``X.T``) and ``ranks`` (:func:`feature_ranks`) may
    be passed in when many trees share one matrix.
    """
    p = X.shape[1]
    if len(samples) == 0:
        raise ValueError("cannot grow a tree on zero rows")
    m = p if features_per_split is None else int(features_per_split)
    if not 1 <= m:
        raise ValueError("features_per_split must be >= 1")
    if is_binary is None:
        is_binary = binary_columns(X)
    if Xt is None:
        Xt = np.ascontiguousarray(X.T)
    if ranks is None:
        ranks = feature_ranks(X)
    out = K.build_class_tree(
        Xt, ranks, y_enc, w, np.asarray(samples, dtype=np.int64), n_classes,
        -1 if max_depth is None else int(max_depth),
        int(min_samples_split), int(min_samples_leaf), min(m, p), is_binary,
        np.uint64(seed & K._MASK64),
    )
    feature, threshold, left, right, value, _weight, _n, improvement = out
    return TreeArrays(feature, threshold, left, right, value, improvement)


class DecisionTree(Classifier):
    kind = "tree"

    def __init__(self, max_depth: int | None = None, min_samples_split: int = 2,
                 min_samples_leaf: int = 1, features_per_split: int | None = None,
                 seed: int = 0):
        if max_depth is not None and max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if min_samples_leaf < 1 or min_samples_split < 2:
            raise ValueError("min_samples_leaf >= 1 and min_samples_split >= 2 required")
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.features_per_split = features_per_split
        self.seed = seed
        self.tree_: TreeArrays | None = None

    def params(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "features_per_split": self.features_per_split,
            "seed": self.seed,
        }

    def _fit(self, X, y, w):
        self.tree_ = grow_classification_tree(
            X, y, w, np.arange(len(y)), len(self.classes_),
            max_depth=self.max_depth, min_samples_split=self.min_samples_split,
            min_samples_leaf=self.min_samples_leaf,
            features_per_split=self.features_per_split, seed=self.seed,
        )

    def _proba(self, X):
        return self.tree_.value[self.tree_.apply(X)]

    def feature_gains(self) -> np.ndarray:
        return self.tree_.feature_gains(self.n_features_)

    def to_dict(self) -> dict:
        return {**self._header(), "params": self.params(), "tree": self.tree_.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        model = cls(**d["params"])
        model._load_header(d)
        model.tree_ = TreeArrays.from_dict(d["tree"])
        return model


def fit_tree(features, labels, weights=None, params: dict | None = None) -> DecisionTree:
    return DecisionTree(**(params or {})).fit(features, labels, weights)
