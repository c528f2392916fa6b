from __future__ import annotations

import numpy as np

MODEL_FORMAT_VERSION = 1


class NotFittedError(RuntimeError):
    pass


class Classifier:
    """Shared plumbing: label encoding, weight checks, argmax prediction.

    Subclasses implement ``_fit(X, y_enc, w)`` and ``_proba(X)``, where
    ``y_enc`` indexes into ``classes_`` (sorted training labels).
    """

    kind = "base"
    classes_: np.ndarray | None = None

    def fit(self, X, y, sample_weight=None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        if len(X) == 0:
            raise ValueError("cannot fit on empty input")
        if len(y) != len(X):
            raise ValueError("X and y disagree on row count")
        if sample_weight is None:
            w = np.ones(len(y))
        else:
            w = np.asarray(sample_weight, dtype=np.float64)
            if w.shape != y.shape or np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("sample_weight must be finite, non-negative, one per row")
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        self.n_features_ = X.shape[1]
        self._fit(X, y_enc.astype(np.int64), w)
        return self

    def _check_X(self, X) -> np.ndarray:
        if self.classes_ is None:
            raise NotFittedError(f"{type(self).__name__} is not fitted")
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got shape {X.shape}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        return self._proba(self._check_X(X))

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        # np.argmax returns the first maximum: lowest class wins ties
        return self.classes_[np.argmax(proba, axis=1)]

    def _fit(self, X, y, w):  # pragma: no cover - abstract
        raise NotImplementedError

    def _proba(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _header(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "classes": [int(c) for c in self.classes_],
            "n_features": int(self.n_features_),
        }

    def _load_header(self, d: dict) -> None:
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {d.get('format_version')}")
        self.classes_ = np.asarray(d["classes"], dtype=np.int64)
        self.n_features_ = int(d["n_features"])


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
