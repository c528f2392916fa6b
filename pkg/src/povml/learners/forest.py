"""Random forest: bootstrap-resampled CART trees with per-split feature sampling."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .._threads import thread_count
from .base import Classifier
from .tree import feature_ranks, TreeArrays, binary_columns, grow_classification_tree


def tree_seeds(seed: int, n_trees: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n_trees)


class RandomForest(Classifier):
    kind = "forest"

    def __init__(self, n_trees: int = 500, max_depth: int | None = None,
                 min_samples_split: int = 2, min_samples_leaf: int = 1,
                 features_per_split: int | str | None = "sqrt", bootstrap: bool = True,
                 voting: str = "soft", seed: int = 0, threads: int | None = None):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if voting not in ("soft", "hard"):
            raise ValueError("voting must be 'soft' or 'hard'")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.features_per_split = features_per_split
        self.bootstrap = bootstrap
        self.voting = voting
        self.seed = seed
        self.threads = threads
        self.trees_: list[TreeArrays] = []

    def params(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "features_per_split": self.features_per_split,
            "bootstrap": self.bootstrap,
            "voting": self.voting,
            "seed": self.seed,
        }

    def resolved_features_per_split(self, p: int) -> int:
        m = self.features_per_split
        if m is None:
            return p
        if m == "sqrt":
            return max(1, math.isqrt(p))
        return max(1, min(int(m), p))

    def _fit(self, X, y, w):
        n, p = X.shape
        m = self.resolved_features_per_split(p)
        is_binary = binary_columns(X)
        n_classes = len(self.classes_)
        Xt = np.ascontiguousarray(X.T)
        ranks = feature_ranks(X)

        def grow(seq: np.random.SeedSequence) -> TreeArrays:
            rng = np.random.default_rng(seq)
            samples = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            return grow_classification_tree(
                X, y, w, samples, n_classes, max_depth=self.max_depth,
                min_samples_split=self.min_samples_split,
                min_samples_leaf=self.min_samples_leaf, features_per_split=m,
                seed=int(rng.integers(0, 2**63)), is_binary=is_binary, Xt=Xt, ranks=ranks,
            )

        seqs = tree_seeds(self.seed, self.n_trees)
        workers = thread_count(self.threads)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                self.trees_ = list(pool.map(grow, seqs))
        else:
            self.trees_ = [grow(s) for s in seqs]

    def tree_probas(self, X) -> np.ndarray:
        X = self._check_X(X)
        return np.stack([t.value[t.apply(X)] for t in self.trees_])

    def _proba(self, X):
        per_tree = np.stack([t.value[t.apply(X)] for t in self.trees_])
        if self.voting == "soft":
            return per_tree.mean(axis=0)
        votes = np.argmax(per_tree, axis=2)
        out = np.zeros((X.shape[0], len(self.classes_)))
        for c in range(len(self.classes_)):
            out[:, c] = np.mean(votes == c, axis=0)
        return out

    def feature_gains(self) -> np.ndarray:
        return sum(t.feature_gains(self.n_features_) for t in self.trees_)

    def to_dict(self) -> dict:
        return {**self._header(), "params": self.params(),
                "trees": [t.to_dict() for t in self.trees_]}

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForest":
        model = cls(**d["params"])
        model._load_header(d)
        model.trees_ = [TreeArrays.from_dict(t) for t in d["trees"]]
        return model


ForestModel = RandomForest


def fit_forest(features, labels, weights=None, params: dict | None = None) -> RandomForest:
    return RandomForest(**(params or {})).fit(features, labels, weights)
