"""Config-driven pipeline: wrangle, split, scale, reduce, balance, fit, evaluate.

Every stage that is fitted sees training rows only; held-out rows are only
ever passed to ``transform`` / ``predict``.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .balance import BalanceConfig, balance
from .evaluate import (
    ConfusionMatrix,
    EvalReport,
    SplitIndices,
    feature_importance,
    metrics,
    split_80_20,
    stratified_kfold,
)
from .learners import MODELS, Classifier, make_model, model_from_dict
from .matrix import FeatureMatrix
from .reduce import PcaModel, fit_pca, project
from .scale import ScalerState, fit_scaler, transform
from .schema import RawTable
from .wrangle import WranglePlan, apply_plan, build_default_plan, filter_rows

logger = logging.getLogger(__name__)

CLASS_LABELS = [1, 2, 3, 4]

MODEL_DEFAULTS: dict[str, dict] = {
    "tree": {"max_depth": None, "min_samples_leaf": 1},
    "forest": {"n_trees": 500, "features_per_split": "sqrt", "max_depth": None, "min_samples_leaf": 1},
    "gbt": {"iterations": 300, "learning_rate": 0.1, "max_depth": 3, "subsample": 1.0},
    "nb": {"alpha": 1.0, "var_floor": 1e-9},
    "knn": {"k": 5},
}


class ConfigError(ValueError):
    """Invalid pipeline configuration."""


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


class _stage:
    """Context manager tagging any exception with the failing stage name."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


@dataclass
class PcaConfig:
    enabled: bool = False
    k: int = 60


@dataclass
class ModelConfig:
    kind: str = "gbt"
    params: dict = field(default_factory=dict)


@dataclass
class EvalConfig:
    test_fraction: float = 0.2
    cv_folds: int = 0
    stratified: bool = True
    averaging: str = "macro"


@dataclass
class PipelineConfig:
    dataset: str | None = None
    seed: int = 0
    wrangle_plan: str | None = None
    minmax_columns: list[str] = field(default_factory=lambda: ["dependency"])
    pca: PcaConfig = field(default_factory=PcaConfig)
    balance: BalanceConfig = field(default_factory=BalanceConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.model.kind not in MODELS:
            raise ConfigError(f"unknown model kind {self.model.kind!r}; choose from {sorted(MODELS)}")
        if not 0.0 < self.eval.test_fraction < 1.0:
            raise ConfigError("eval.test_fraction must lie in (0, 1)")
        if self.eval.cv_folds < 0 or self.eval.cv_folds == 1:
            raise ConfigError("eval.cv_folds must be 0 (off) or >= 2")
        if self.eval.averaging not in ("macro", "weighted"):
            raise ConfigError("eval.averaging must be 'macro' or 'weighted'")
        if self.pca.k < 1:
            raise ConfigError("pca.k must be >= 1")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            if "pca" in d:
                d["pca"] = PcaConfig(**d["pca"])
            if "balance" in d:
                d["balance"] = BalanceConfig(**d["balance"])
            if "model" in d:
                d["model"] = ModelConfig(**d["model"])
            if "eval" in d:
                d["eval"] = EvalConfig(**d["eval"])
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def plan(self) -> WranglePlan:
        return WranglePlan.load(self.wrangle_plan) if self.wrangle_plan else build_default_plan()


def stage_seed(seed: int, stage: str) -> int:
    """Deterministic per-stage seed fanned out from the master seed."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


def model_params(config: PipelineConfig, seed_stage: str = "model") -> dict:
    params = dict(MODEL_DEFAULTS[config.model.kind])
    params.update(config.model.params)
    if config.model.kind in ("tree", "forest", "gbt") and "seed" not in config.model.params:
        params["seed"] = stage_seed(config.seed, seed_stage)
    return params


@dataclass
class FittedPipeline:
    config: PipelineConfig
    scaler: ScalerState
    pca: PcaModel | None
    model: Classifier
    input_features: list[str]
    model_features: list[str]

    def features(self, matrix: FeatureMatrix) -> FeatureMatrix:
        if matrix.feature_names != self.input_features:
            raise ValueError("feature names differ from the matrix the pipeline was fitted on")
        out = transform(matrix, self.scaler)
        if self.pca is not None:
            out = project(out, self.pca)
        return out

    def predict(self, matrix: FeatureMatrix) -> np.ndarray:
        return self.model.predict(self.features(matrix).values)

    def predict_proba(self, matrix: FeatureMatrix) -> np.ndarray:
        return self.model.predict_proba(self.features(matrix).values)

    def importances(self) -> dict[str, float]:
        if self.config.model.kind not in ("tree", "forest", "gbt"):
            return {}
        return feature_importance(self.model, self.model_features)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config.config_hash(),
            "input_features": self.input_features,
            "model_features": self.model_features,
            "scaler": self.scaler.to_dict(),
            "pca": None if self.pca is None else self.pca.to_dict(),
            "model": self.model.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict, config: PipelineConfig) -> "FittedPipeline":
        return cls(
            config,
            ScalerState.from_dict(d["scaler"]),
            None if d["pca"] is None else PcaModel.from_dict(d["pca"]),
            model_from_dict(d["model"]),
            list(d["input_features"]),
            list(d["model_features"]),
        )


def fit_pipeline(config: PipelineConfig, train: FeatureMatrix, seed_stage: str = "model") -> FittedPipeline:
    with _stage("scale"):
        minmax = [c for c in config.minmax_columns if c in train.numeric_feature_names]
        scaler = fit_scaler(train, minmax)
        scaled = transform(train, scaler)
    pca = None
    if config.pca.enabled:
        with _stage("reduce"):
            pca = fit_pca(scaled, config.pca.k)
            scaled = project(scaled, pca)
    with _stage("balance"):
        bal = BalanceConfig(config.balance.method, config.balance.smote_k,
                            stage_seed(config.seed, seed_stage + ":balance"))
        X, y, w = balance(scaled.values, scaled.labels, bal)
    with _stage("learn"):
        params = model_params(config, seed_stage)
        if config.model.kind == "nb" and "categorical_features" not in params:
            numeric = set(scaled.numeric_feature_names)
            params["categorical_features"] = (
                [] if pca is not None
                else [j for j, n in enumerate(scaled.feature_names) if n not in numeric]
            )
        model = make_model(config.model.kind, **params)
        model.fit(X, y, w)
    return FittedPipeline(config, scaler, pca, model, list(train.feature_names), list(scaled.feature_names))


def evaluate_predictions(y_true, y_pred, averaging: str = "macro") -> EvalReport:
    labels = sorted(set(CLASS_LABELS) | set(np.unique(y_true).tolist()) | set(np.unique(y_pred).tolist()))
    return metrics(ConfusionMatrix.from_predictions(y_true, y_pred, labels), averaging)


@dataclass
class CVResult:
    fold_reports: list[EvalReport]

    def mean(self, key: str) -> float:
        return float(np.mean([r.headline()[key] for r in self.fold_reports]))

    def fold_scores(self) -> list[dict]:
        return [dict(fold=i + 1, **r.headline()) for i, r in enumerate(self.fold_reports)]

    def summary(self) -> dict:
        return {
            "folds": self.fold_scores(),
            "mean": {k: self.mean(k) for k in ("accuracy", "f1", "recall", "precision")},
        }


def cross_validate(config: PipelineConfig, matrix: FeatureMatrix, k: int = 5, seed: int | None = None) -> CVResult:
    """Stratified k-fold CV of the full scale/reduce/balance/learn chain."""
    fold_seed = stage_seed(config.seed, "cv") if seed is None else seed
    with _stage("cv-split"):
        folds = stratified_kfold(matrix.labels, k, fold_seed)
    reports = []
    for i, held in enumerate(folds):
        train_rows = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != i]))
        fitted = fit_pipeline(config, matrix.take(train_rows), seed_stage=f"cv{i}")
        test = matrix.take(held)
        with _stage("evaluate"):
            reports.append(evaluate_predictions(test.labels, fitted.predict(test), config.eval.averaging))
    return CVResult(reports)


@dataclass
class HoldoutRun:
    config: PipelineConfig
    plan: WranglePlan
    split: SplitIndices
    train: FeatureMatrix
    test: FeatureMatrix
    fitted: FittedPipeline
    report: EvalReport | None
    cv: CVResult | None
    audit: list[str]


def prepare(table: RawTable, config: PipelineConfig) -> tuple[WranglePlan, RawTable, list[str]]:
    with _stage("wrangle"):
        plan = config.plan()
        kept, audit = filter_rows(table, plan)
        filtered = table.take(kept)
    return plan, filtered, audit


def run_holdout(table: RawTable, config: PipelineConfig, evaluate: bool = True, cv_folds: int | None = None) -> HoldoutRun:
    """Wrangle, split, fit on the train part, optionally score the test part and run CV."""
    audit = [
        f"config_hash {config.config_hash()}",
        f"seed {config.seed}",
        f"model {config.model.kind} {json.dumps(model_params(config), sort_keys=True)}",
        f"stage ingest: {table.n_rows} rows x {table.n_cols} columns",
    ]
    plan, filtered, row_audit = prepare(table, config)
    audit += [f"stage wrangle: {line}" for line in row_audit]
    with _stage("split"):
        labels = filtered.column(plan.target).astype(np.int64)
        split = split_80_20(labels, stage_seed(config.seed, "split"), config.eval.stratified,
                            config.eval.test_fraction)
    with _stage("wrangle"):
        train = apply_plan(filtered.take(split.train_rows), plan)
        test = apply_plan(filtered.take(split.test_rows), plan, medians=train.medians)
    audit.append(f"stage wrangle: {filtered.n_rows} rows x {train.n_features} features "
                 f"({len(train.numeric_feature_names)} numeric; Target excluded)")
    audit += [f"stage wrangle[train]: {line}" for line in train.audit if line.startswith("impute")]
    audit.append(f"stage split: train {train.n_rows} rows, test {test.n_rows} rows "
                 f"(stratified={config.eval.stratified})")
    if config.balance.method != "none":
        before = dict(zip(*[a.tolist() for a in np.unique(train.labels, return_counts=True)]))
        audit.append(f"stage balance: {config.balance.method}, before {before}")
    fitted = fit_pipeline(config, train)
    audit.append(f"stage learn: {len(fitted.model_features)} model features")
    report = None
    if evaluate:
        with _stage("evaluate"):
            report = evaluate_predictions(test.labels, fitted.predict(test), config.eval.averaging)
            report.importances = fitted.importances()
        audit.append(f"stage evaluate: accuracy {report.accuracy!r} macro_f1 {report.macro_f1!r}")
    folds = config.eval.cv_folds if cv_folds is None else cv_folds
    cv = None
    if folds:
        cv = cross_validate(config, train, folds)
        if report is not None:
            report.fold_scores = cv.fold_scores()
        audit.append(f"stage cv: {folds} folds, mean accuracy {cv.mean('accuracy')!r}")
    return HoldoutRun(config, plan, split, train, test, fitted, report, cv, audit)
