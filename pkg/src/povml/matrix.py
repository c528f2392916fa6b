from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class FeatureMatrix:
    """Dense numeric rows x named features, paired with integer class labels."""

    feature_names: list[str]
    values: np.ndarray
    labels: np.ndarray
    numeric_feature_names: list[str] = field(default_factory=list)
    audit: list[str] = field(default_factory=list)
    medians: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        if self.values.shape[1] != len(self.feature_names):
            raise ValueError(
                f"{self.values.shape[1]} value columns for {len(self.feature_names)} names"
            )
        if len(self.labels) != self.values.shape[0]:
            raise ValueError("labels and values disagree on row count")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("duplicate feature names")
        unknown = set(self.numeric_feature_names) - set(self.feature_names)
        if unknown:
            raise ValueError(f"numeric features not in feature_names: {sorted(unknown)}")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def index_of(self, name: str) -> int:
        return self.feature_names.index(name)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index_of(name)]

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        return replace(self, values=self.values[rows], labels=self.labels[rows], audit=[])

    def with_values(
        self,
        values: np.ndarray,
        feature_names: list[str] | None = None,
        numeric_feature_names: list[str] | None = None,
    ) -> "FeatureMatrix":
        names = self.feature_names if feature_names is None else feature_names
        numeric = self.numeric_feature_names if numeric_feature_names is None else numeric_feature_names
        return FeatureMatrix(list(names), values, self.labels, list(numeric), list(self.audit), dict(self.medians))

    def missing_count(self) -> int:
        return int(np.isnan(self.values).sum())
