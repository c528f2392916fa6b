"""K-nearest neighbours under Euclidean distance."""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .base import Classifier


def euclidean(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.sqrt(np.sum((a - b) ** 2)))


class KNearestNeighbors(Classifier):
    kind = "knn"

    def __init__(self, k: int = 5):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k

    def params(self) -> dict:
        return {"k": self.k}

    def _fit(self, X, y, w):
        if self.k > len(y):
            raise ValueError(f"k={self.k} exceeds the {len(y)} training rows")
        self.X_ = X.copy()
        self.y_ = y.copy()
        self.w_ = w.copy()

    def votes(self, X) -> np.ndarray:
        X = self._check_X(X)
        return K.knn_votes(self.X_, self.y_, self.w_, X, self.k, len(self.classes_))

    def _proba(self, X):
        v = K.knn_votes(self.X_, self.y_, self.w_, X, self.k, len(self.classes_))
        total = v.sum(axis=1, keepdims=True)
        total[total == 0] = 1.0
        out = v / total
        empty = v.sum(axis=1) == 0
        out[empty] = 1.0 / len(self.classes_)
        return out

    def to_dict(self) -> dict:
        return {**self._header(), "params": self.params(), "X": self.X_.tolist(),
                "y": self.y_.tolist(), "w": self.w_.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "KNearestNeighbors":
        model = cls(**d["params"])
        model._load_header(d)
        model.X_ = np.asarray(d["X"], dtype=np.float64).reshape(len(d["y"]), -1)
        model.y_ = np.asarray(d["y"], dtype=np.int64)
        model.w_ = np.asarray(d["w"], dtype=np.float64)
        return model


KnnModel = KNearestNeighbors


def knn_predict(model: KNearestNeighbors, query_rows) -> np.ndarray:
    if model.classes_ is None or len(model.y_) == 0:
        raise ValueError("knn model has no training rows")
    return model.predict(query_rows)
