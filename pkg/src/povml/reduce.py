"""Principal component analysis with explained-variance reporting."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .matrix import FeatureMatrix


@dataclass
class PcaModel:
    feature_names: list[str]
    component_vectors: np.ndarray  # k x p, rows orthonormal
    column_means: np.ndarray
    explained_variance: np.ndarray  # k, descending
    explained_variance_ratio: np.ndarray  # k
    all_explained_variance: np.ndarray  # p, every component

    @property
    def k(self) -> int:
        return self.component_vectors.shape[0]

    @property
    def component_names(self) -> list[str]:
        return [f"pc{i + 1}" for i in range(self.k)]

    @property
    def all_explained_variance_ratio(self) -> np.ndarray:
        total = self.all_explained_variance.sum()
        if total <= 0:
            return np.zeros_like(self.all_explained_variance)
        return self.all_explained_variance / total

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "component_vectors": self.component_vectors.tolist(),
            "column_means": self.column_means.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "all_explained_variance": self.all_explained_variance.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(
            list(d["feature_names"]),
            np.asarray(d["component_vectors"], dtype=np.float64),
            np.asarray(d["column_means"], dtype=np.float64),
            np.asarray(d["explained_variance"], dtype=np.float64),
            np.asarray(d["explained_variance_ratio"], dtype=np.float64),
            np.asarray(d["all_explained_variance"], dtype=np.float64),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PcaModel":
        return cls.from_dict(json.loads(text))

    def variance_csv(self) -> str:
        """component, ratio, cumulative ratio for every component."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["component", "explained_variance_ratio", "cumulative_ratio"])
        ratios = self.all_explained_variance_ratio
        cum = np.cumsum(ratios)
        for i, (r, c) in enumerate(zip(ratios, cum), start=1):
            w.writerow([i, repr(float(r)), repr(float(c))])
        return buf.getvalue()


def fit_pca(matrix: FeatureMatrix | np.ndarray, k: int) -> PcaModel:
    """Top-``k`` principal directions from the eigendecomposition of the
    sample covariance (divide by n-1).

    Each component's largest-magnitude entry is made positive.
    """
    if isinstance(matrix, FeatureMatrix):
        X, names = matrix.values, list(matrix.feature_names)
    else:
        X = np.asarray(matrix, dtype=np.float64)
        names = [f"x{i}" for i in range(X.shape[1])]
    n, p = X.shape
    if n < 2:
        raise ValueError(f"PCA needs at least 2 rows, got {n}")
    if not 1 <= k <= p:
        raise ValueError(f"k={k} out of range for {p} features")
    means = X.mean(axis=0)
    centered = X - means
    cov = centered.T @ centered / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")
    evals = np.clip(evals[order], 0.0, None)
    vecs = evecs[:, order].T.copy()
    for row in vecs:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    total = evals.sum()
    ratio = evals / total if total > 0 else np.zeros_like(evals)
    return PcaModel(names, vecs[:k], means, evals[:k], ratio[:k], evals)


def project(matrix: FeatureMatrix, model: PcaModel) -> FeatureMatrix:
    if matrix.n_features != len(model.feature_names) or matrix.feature_names != model.feature_names:
        raise ValueError(
            f"dimension mismatch: PCA fitted on {len(model.feature_names)} features, "
            f"matrix has {matrix.n_features}"
        )
    scores = (matrix.values - model.column_means) @ model.component_vectors.T
    return matrix.with_values(scores, model.component_names, [])


def reconstruct(scores: np.ndarray, model: PcaModel) -> np.ndarray:
    return scores @ model.component_vectors + model.column_means
