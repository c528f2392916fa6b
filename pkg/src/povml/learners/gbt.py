"""Multiclass gradient boosted trees on the softmax cross-entropy.

Scores start at the log class priors.  Each stage fits one least-squares
regression tree per class to the residual ``onehot - softmax(scores)`` and
sets leaf values by a single Newton step,

    gamma = (K - 1) / K * sum(w * r) / sum(w * |r| * (1 - |r|)),

before adding ``learning_rate * gamma`` to that class's scores.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .base import Classifier, softmax
from .tree import TreeArrays


def log_loss(y_enc: np.ndarray, proba: np.ndarray, w: np.ndarray | None = None) -> float:
    p = np.clip(proba[np.arange(len(y_enc)), y_enc], 1e-300, None)
    if w is None:
        return float(-np.mean(np.log(p)))
    return float(-np.sum(w * np.log(p)) / np.sum(w))


class GradientBoostedTrees(Classifier):
    kind = "gbt"

    def __init__(self, iterations: int = 300, learning_rate: float = 0.1, max_depth: int = 3,
                 min_samples_leaf: int = 1, subsample: float = 1.0, seed: int = 0):
        if not 0.0 <= learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in [0, 1]")
        if not 0.0 < subsample <= 1.0:
            raise ValueError("subsample must lie in (0, 1]")
        if max_depth < 1 or iterations < 0 or min_samples_leaf < 1:
            raise ValueError("max_depth >= 1, iterations >= 0, min_samples_leaf >= 1 required")
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.subsample = subsample
        self.seed = seed
        self.stages_: list[list[TreeArrays]] = []
        self.init_scores_: np.ndarray | None = None
        self.train_loss_: list[float] = []

    def params(self) -> dict:
        return {
            "iterations": self.iterations,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "subsample": self.subsample,
            "seed": self.seed,
        }

    def _fit(self, X, y, w):
        n, p = X.shape
        k = len(self.classes_)
        if k < 2:
            raise ValueError("gradient boosting needs at least two classes")
        priors = np.bincount(y, weights=w, minlength=k) / w.sum()
        self.init_scores_ = np.log(np.clip(priors, 1e-300, None))
        onehot = np.zeros((n, k))
        onehot[np.arange(n), y] = 1.0
        scores = np.tile(self.init_scores_, (n, 1))
        sorted_idx = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
        sorted_vals = np.ascontiguousarray(np.take_along_axis(X.T, sorted_idx, axis=1))
        rng = np.random.default_rng(self.seed)
        n_sub = max(1, int(np.floor(self.subsample * n)))
        leaf_scale = (k - 1) / k

        self.stages_ = []
        self.train_loss_ = [log_loss(y, softmax(scores), w)]
        for _ in range(self.iterations):
            if n_sub < n:
                in_sample = np.zeros(n, dtype=np.bool_)
                in_sample[rng.choice(n, size=n_sub, replace=False)] = True
            else:
                in_sample = np.ones(n, dtype=np.bool_)
            proba = softmax(scores)
            stage = []
            for c in range(k):
                resid = onehot[:, c] - proba[:, c]
                absr = np.abs(resid)
                hess = absr * (1.0 - absr)
                feature, threshold, left, right, value, improvement, leaf = K.build_reg_tree(
                    X, sorted_idx, sorted_vals, resid, hess, w, in_sample, self.max_depth,
                    self.min_samples_leaf, leaf_scale,
                )
                tree = TreeArrays(feature, threshold, left, right, value, improvement)
                if n_sub < n:
                    leaf = tree.apply(X)
                scores[:, c] += self.learning_rate * value[leaf]
                stage.append(tree)
            self.stages_.append(stage)
            self.train_loss_.append(log_loss(y, softmax(scores), w))

    def decision_function(self, X) -> np.ndarray:
        X = self._check_X(X)
        return self._scores(X)

    def _scores(self, X, n_stages: int | None = None) -> np.ndarray:
        scores = np.tile(self.init_scores_, (X.shape[0], 1))
        for stage in self.stages_[:n_stages]:
            for c, tree in enumerate(stage):
                scores[:, c] += self.learning_rate * tree.value[tree.apply(X)]
        return scores

    def _proba(self, X):
        return softmax(self._scores(X))

    def staged_predict_proba(self, X):
        X = self._check_X(X)
        scores = np.tile(self.init_scores_, (X.shape[0], 1))
        yield softmax(scores)
        for stage in self.stages_:
            for c, tree in enumerate(stage):
                scores[:, c] += self.learning_rate * tree.value[tree.apply(X)]
            yield softmax(scores)

    def feature_gains(self) -> np.ndarray:
        out = np.zeros(self.n_features_)
        for stage in self.stages_:
            for tree in stage:
                out += tree.feature_gains(self.n_features_)
        return out

    def to_dict(self) -> dict:
        return {
            **self._header(),
            "params": self.params(),
            "init_scores": self.init_scores_.tolist(),
            "stages": [[t.to_dict() for t in stage] for stage in self.stages_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GradientBoostedTrees":
        model = cls(**d["params"])
        model._load_header(d)
        model.init_scores_ = np.asarray(d["init_scores"], dtype=np.float64)
        model.stages_ = [[TreeArrays.from_dict(t) for t in stage] for stage in d["stages"]]
        return model


GbtModel = GradientBoostedTrees


def fit_gbt(features, labels, weights=None, params: dict | None = None) -> GradientBoostedTrees:
    return GradientBoostedTrees(**(params or {})).fit(features, labels, weights)
