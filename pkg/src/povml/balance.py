"""Class-imbalance treatments for training data.

All resamplers return ``(X, y)`` with equal class counts and are
deterministic for a fixed seed.  Original rows keep their input order and
come first; added rows are appended class by class.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

METHODS = ("none", "undersample", "oversample", "smote", "class_weights")


@dataclass
class BalanceConfig:
    method: str = "none"
    smote_k: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown balance method {self.method!r}; choose from {METHODS}")
        if self.smote_k < 1:
            raise ValueError("smote_k must be >= 1")


def _class_counts(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise ValueError("balancing needs at least two classes")
    return classes, counts


def undersample(X, y, seed: int = 0):
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y)
    classes, counts = _class_counts(y)
    target = counts.min()
    rng = np.random.default_rng(seed)
    keep = []
    for c in classes:
        idx = np.flatnonzero(y == c)
        keep.append(np.sort(rng.choice(idx, size=target, replace=False)))
    rows = np.sort(np.concatenate(keep))
    return X[rows], y[rows]


def oversample(X, y, seed: int = 0):
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y)
    classes, counts = _class_counts(y)
    target = counts.max()
    rng = np.random.default_rng(seed)
    extra = []
    for c, n in zip(classes, counts):
        if n < target:
            idx = np.flatnonzero(y == c)
            extra.append(rng.choice(idx, size=target - n, replace=True))
    rows = np.concatenate([np.arange(len(y))] + extra)
    return X[rows], y[rows]


def nearest_neighbors(points: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest other points (Euclidean), ties by lower index."""
    sq = np.sum(points**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def smote(X, y, k: int = 5, seed: int = 0):
    """Raise each class to the majority count with interpolated points.

    A synthetic row is ``x + lam * (x_nn - x)`` with ``lam ~ U[0, 1]`` and
    ``x_nn`` one of the ``k`` nearest same-class rows of ``x``.  A class
    with a single member is duplicated instead (logged).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y)
    classes, counts = _class_counts(y)
    target = counts.max()
    rng = np.random.default_rng(seed)
    new_X, new_y = [X], [y]
    for c, n in zip(classes, counts):
        need = target - n
        if need == 0:
            continue
        idx = np.flatnonzero(y == c)
        members = X[idx]
        if n < 2:
            logger.warning("class %s has one member; SMOTE falls back to duplication", c)
            new_X.append(np.repeat(members, need, axis=0))
            new_y.append(np.full(need, c, dtype=y.dtype))
            continue
        kk = min(k, n - 1)
        nn = nearest_neighbors(members, kk)
        base = rng.integers(0, n, size=need)
        pick = nn[base, rng.integers(0, kk, size=need)]
        lam = rng.random(need)[:, None]
        new_X.append(members[base] + lam * (members[pick] - members[base]))
        new_y.append(np.full(need, c, dtype=y.dtype))
    return np.vstack(new_X), np.concatenate(new_y)


def class_weights(labels) -> dict[int, float]:
    """Balanced weights ``N / (K * n_c)``; they preserve the total weight."""
    classes, counts = np.unique(np.asarray(labels), return_counts=True)
    n, k = counts.sum(), len(classes)
    return {int(c): float(n / (k * m)) for c, m in zip(classes, counts)}


def balance(X, y, config: BalanceConfig):
    """Apply ``config`` to training data; returns ``(X, y, sample_weight)``."""
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y)
    if config.method == "none":
        return X, y, None
    if config.method == "class_weights":
        w = class_weights(y)
        return X, y, np.array([w[int(c)] for c in y])
    if config.method == "undersample":
        Xb, yb = undersample(X, y, config.seed)
    elif config.method == "oversample":
        Xb, yb = oversample(X, y, config.seed)
    else:
        Xb, yb = smote(X, y, config.smote_k, config.seed)
    return Xb, yb, None
