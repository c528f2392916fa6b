import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from povml.matrix import FeatureMatrix
from povml.synthetic import write_csv

settings.register_profile("povml", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("povml")


@pytest.fixture(scope="session")
def small_csv(tmp_path_factory) -> Path:
    """1,200-row synthetic file in the canonical layout."""
    return write_csv(tmp_path_factory.mktemp("data") / "small.csv", n_rows=1200, seed=11)


@pytest.fixture(scope="session")
def reference_shaped_csv(tmp_path_factory) -> Path:
    """Synthetic file at the reference size; counts mirror the survey file."""
    return write_csv(tmp_path_factory.mktemp("data") / "ref.csv", n_rows=9557, seed=5)


@pytest.fixture(scope="session")
def dataset_path() -> Path | None:
    value = os.environ.get("POVML_DATASET")
    return Path(value) if value else None


def make_matrix(values, labels, names=None, numeric=None) -> FeatureMatrix:
    values = np.ascontiguousarray(values, dtype=np.float64)
    names = names or [f"f{j}" for j in range(values.shape[1])]
    return FeatureMatrix(
        feature_names=list(names),
        values=values,
        labels=np.asarray(labels, dtype=np.int64),
        numeric_feature_names=list(names if numeric is None else numeric),
        audit=[],
        medians={},
    )
