"""Splitting, stratified folds, multiclass metrics and feature importance."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .learners import DecisionTree, GradientBoostedTrees, RandomForest


@dataclass
class SplitIndices:
    train_rows: np.ndarray
    test_rows: np.ndarray
    seed: int


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_80_20(labels, seed: int = 0, stratified: bool = True, test_fraction: float = 0.2) -> SplitIndices:
    """Random train/test split; the test size is ``round_half_up(fraction * n)``.

    Stratified splits allocate per-class test counts by largest remainder,
    so each is within 1 of ``fraction * support``.
    """
    y = np.asarray(labels)
    n = len(y)
    if n < 5:
        raise ValueError(f"need at least 5 rows to split, got {n}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    n_test = _round_half_up(test_fraction * n)
    rng = np.random.default_rng(seed)
    if not stratified:
        perm = rng.permutation(n)
        test = np.sort(perm[:n_test])
    else:
        classes, counts = np.unique(y, return_counts=True)
        if n < len(classes):
            raise ValueError("fewer rows than classes for a stratified split")
        exact = test_fraction * counts
        alloc = np.floor(exact).astype(np.int64)
        remainder = exact - alloc
        short = n_test - alloc.sum()
        order = np.lexsort((classes, -remainder))
        for i in order[: max(0, short)]:
            alloc[i] += 1
        parts = []
        for c, m in zip(classes, alloc):
            idx = np.flatnonzero(y == c)
            parts.append(rng.permutation(idx)[:m])
        test = np.sort(np.concatenate(parts))
    mask = np.zeros(n, dtype=bool)
    mask[test] = True
    return SplitIndices(np.flatnonzero(~mask), test, seed)


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Partition row indices into k folds preserving class proportions.

    Each class is shuffled and dealt round-robin; the starting fold rotates
    with the running row count so fold sizes stay within one of each other.
    """
    y = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    classes, counts = np.unique(y, return_counts=True)
    small = [int(c) for c, m in zip(classes, counts) if m < k]
    if small:
        raise ValueError(f"classes {small} have fewer than k={k} members")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in classes:
        idx = rng.permutation(np.flatnonzero(y == c))
        for j, row in enumerate(idx):
            folds[(offset + j) % k].append(int(row))
        offset += len(idx)
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


@dataclass
class ConfusionMatrix:
    labels: list[int]
    counts: np.ndarray  # counts[i, j]: true labels[i] predicted labels[j]

    @classmethod
    def from_predictions(cls, y_true, y_pred, labels=None) -> "ConfusionMatrix":
        y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
        if labels is None:
            labels = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
        labels = [int(v) for v in labels]
        pos = {c: i for i, c in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for t, p in zip(y_true.tolist(), y_pred.tolist()):
            counts[pos[int(t)], pos[int(p)]] += 1
        return cls(labels, counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)


@dataclass
class EvalReport:
    accuracy: float
    precision: dict[int, float]
    recall: dict[int, float]
    f1: dict[int, float]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    averaging: str = "macro"
    support: dict[int, int] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    confusion: list[list[int]] = field(default_factory=list)
    fold_scores: list[dict] = field(default_factory=list)
    importances: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def keyed(d):
            return {str(k): v for k, v in d.items()}

        return {
            "accuracy": self.accuracy,
            "precision": keyed(self.precision),
            "recall": keyed(self.recall),
            "f1": keyed(self.f1),
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "averaging": self.averaging,
            "support": keyed(self.support),
            "flags": list(self.flags),
            "confusion": self.confusion,
            "fold_scores": self.fold_scores,
            "importances": dict(self.importances),
        }

    def headline(self) -> dict[str, float]:
        return {
            "accuracy": self.accuracy,
            "f1": self.macro_f1,
            "recall": self.macro_recall,
            "precision": self.macro_precision,
        }


def metrics(confusion: ConfusionMatrix, averaging: str = "macro") -> EvalReport:
    """Accuracy and per-class / averaged precision, recall and F1.

    A class never predicted gets precision 0; a class with no support is
    left out of the averages.  Both cases are flagged.  ``averaging`` is
    ``macro`` (unweighted class mean) or ``weighted`` (by support).
    """
    if averaging not in ("macro", "weighted"):
        raise ValueError("averaging must be 'macro' or 'weighted'")
    m = confusion.counts.astype(np.float64)
    total = m.sum()
    if total <= 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(m)
    predicted = m.sum(axis=0)
    support = m.sum(axis=1)
    flags = []
    precision, recall, f1 = {}, {}, {}
    for i, c in enumerate(confusion.labels):
        if predicted[i] > 0:
            precision[c] = float(tp[i] / predicted[i])
        else:
            precision[c] = 0.0
            flags.append(f"class {c}: no predicted positives, precision set to 0")
        if support[i] > 0:
            recall[c] = float(tp[i] / support[i])
        else:
            recall[c] = 0.0
            flags.append(f"class {c}: zero support, excluded from averages")
        pr = precision[c] + recall[c]
        f1[c] = 2 * precision[c] * recall[c] / pr if pr > 0 else 0.0
    present = [c for i, c in enumerate(confusion.labels) if support[i] > 0]
    if averaging == "macro":
        weights = {c: 1.0 for c in present}
    else:
        weights = {c: float(support[confusion.labels.index(c)]) for c in present}
    norm = sum(weights.values())

    def avg(d):
        return float(sum(weights[c] * d[c] for c in present) / norm)

    return EvalReport(
        accuracy=float(tp.sum() / total),
        precision=precision,
        recall=recall,
        f1=f1,
        macro_precision=avg(precision),
        macro_recall=avg(recall),
        macro_f1=avg(f1),
        averaging=averaging,
        support={c: int(support[i]) for i, c in enumerate(confusion.labels)},
        flags=flags,
        confusion=confusion.counts.tolist(),
    )


def micro_recall(confusion: ConfusionMatrix) -> float:
    m = confusion.counts
    return float(np.trace(m) / m.sum())


def feature_importance(model, feature_names) -> dict[str, float]:
    """Normalized total split gain per feature, largest first.

    Gini decrease for trees and forests, squared-error gain for boosting.
    A model without any split yields an empty map.
    """
    if not isinstance(model, (DecisionTree, RandomForest, GradientBoostedTrees)):
        raise TypeError(f"feature importance needs a tree-based model, got {type(model).__name__}")
    gains = model.feature_gains()
    if len(feature_names) != len(gains):
        raise ValueError(f"{len(feature_names)} names for {len(gains)} features")
    total = gains.sum()
    if total <= 0:
        return {}
    frac = gains / total
    order = sorted(range(len(frac)), key=lambda j: (-frac[j], j))
    return {feature_names[j]: float(frac[j]) for j in order if frac[j] > 0}


def importance_csv(importances: dict[str, float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "feature", "fraction"])
    for rank, (name, frac) in enumerate(importances.items(), start=1):
        w.writerow([rank, name, repr(frac)])
    return buf.getvalue()


def report_csv(rows: list[tuple[str, str, float]]) -> str:
    """Flat ``model, metric, value`` table."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "metric", "value"])
    for model, metric, value in rows:
        w.writerow([model, metric, repr(float(value))])
    return buf.getvalue()


def report_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True)
