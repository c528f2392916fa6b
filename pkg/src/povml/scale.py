"""Min-max normalization and z-score standardization of numeric features."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .matrix import FeatureMatrix


@dataclass
class ScalerState:
    columns: list[str]
    kind: dict[str, str]
    minmax: dict[str, tuple[float, float]] = field(default_factory=dict)
    zscore: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "kind": dict(self.kind),
            "minmax": {k: list(v) for k, v in self.minmax.items()},
            "zscore": {k: list(v) for k, v in self.zscore.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerState":
        return cls(
            list(d["columns"]),
            dict(d["kind"]),
            {k: (float(a), float(b)) for k, (a, b) in d["minmax"].items()},
            {k: (float(a), float(b)) for k, (a, b) in d["zscore"].items()},
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ScalerState":
        return cls.from_dict(json.loads(text))

    def _affine(self, name: str) -> tuple[float, float]:
        """(offset, scale) such that x' = (x - offset) / scale; scale 0 = degenerate."""
        if self.kind[name] == "minmax":
            lo, hi = self.minmax[name]
            return lo, hi - lo
        return self.zscore[name]


def fit_scaler(matrix: FeatureMatrix, minmax_columns=("dependency",), columns=None) -> ScalerState:
    """Fit min/max for ``minmax_columns`` and population mean/std for the rest.

    ``columns`` defaults to the matrix's numeric features.
    """
    cols = list(matrix.numeric_feature_names if columns is None else columns)
    numeric = set(matrix.numeric_feature_names)
    for name in list(minmax_columns) + cols:
        if name not in numeric:
            raise ValueError(f"column {name!r} is not a numeric feature")
    minmax_set = set(minmax_columns)
    for name in minmax_set - set(cols):
        cols.append(name)
    state = ScalerState(cols, {})
    for name in cols:
        x = matrix.column(name)
        if name in minmax_set:
            state.kind[name] = "minmax"
            state.minmax[name] = (float(x.min()), float(x.max())) if len(x) else (0.0, 0.0)
        else:
            state.kind[name] = "zscore"
            state.zscore[name] = (float(x.mean()), float(x.std())) if len(x) else (0.0, 0.0)
    return state


def _check(matrix: FeatureMatrix, state: ScalerState) -> None:
    missing = [c for c in state.columns if c not in matrix.feature_names]
    if missing:
        raise ValueError(f"feature-name mismatch: scaler columns {missing} not in matrix")


def transform(matrix: FeatureMatrix, state: ScalerState) -> FeatureMatrix:
    """Rescale fitted columns; degenerate columns (zero spread) map to 0."""
    _check(matrix, state)
    values = matrix.values.copy()
    for name in state.columns:
        j = matrix.index_of(name)
        offset, scale = state._affine(name)
        if scale == 0:
            values[:, j] = 0.0
        else:
            values[:, j] = (values[:, j] - offset) / scale
    return matrix.with_values(values)


def inverse_transform(matrix: FeatureMatrix, state: ScalerState) -> FeatureMatrix:
    _check(matrix, state)
    values = matrix.values.copy()
    for name in state.columns:
        j = matrix.index_of(name)
        offset, scale = state._affine(name)
        values[:, j] = values[:, j] * scale + offset
    return matrix.with_values(values)
