"""``povml`` command line: profile, wrangle, train, evaluate, cv, importance.

Exit codes: 0 success, 2 input or schema error, 3 pipeline stage error,
4 acceptance assertion failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from ._threads import set_threads
from .evaluate import feature_importance, importance_csv, report_csv
from .learners import model_from_dict
from .pipeline import ConfigError, PipelineConfig, StageError, cross_validate, prepare, run_holdout
from .schema import CANONICAL_SCHEMA, SchemaError, load_csv, profile
from .wrangle import WrangleError, apply_plan

logger = logging.getLogger("povml")

EXIT_OK, EXIT_INPUT, EXIT_STAGE, EXIT_ASSERT = 0, 2, 3, 4


class InputError(Exception):
    pass


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _config(args) -> PipelineConfig:
    data: dict = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: invalid JSON: {exc}") from exc
    # flags override file values
    if getattr(args, "dataset", None):
        data["dataset"] = args.dataset
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "model", None):
        data.setdefault("model", {})
        data["model"] = {"kind": args.model, "params": data["model"].get("params", {})
                         if data["model"].get("kind", args.model) == args.model else {}}
    if getattr(args, "pca_k", None) is not None:
        data["pca"] = {"enabled": True, "k": args.pca_k}
    if getattr(args, "balance", None):
        data["balance"] = {**data.get("balance", {}), "method": args.balance}
    if getattr(args, "cv", None) is not None:
        data.setdefault("eval", {})["cv_folds"] = args.cv
    cfg = PipelineConfig.from_dict(data)
    if not cfg.dataset:
        raise InputError("no dataset given (config 'dataset' or --dataset)")
    if cfg.wrangle_plan:
        if not Path(cfg.wrangle_plan).is_file():
            raise InputError(f"wrangle plan not found: {cfg.wrangle_plan}")
        try:
            cfg.plan()
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"invalid wrangle plan {cfg.wrangle_plan}: {exc}") from exc
    return cfg


def _load(path: str):
    if not Path(path).is_file():
        raise InputError(f"dataset not found: {path}")
    return load_csv(path)


def _audit_text(lines: list[str]) -> str:
    return "\n".join(lines) + "\n"


def cmd_profile(args) -> int:
    table = _load(args.dataset)
    prof = profile(table)
    text = _dump(prof.to_dict())
    if args.out:
        _write(Path(args.out).parent, Path(args.out).name, text)
    else:
        sys.stdout.write(text)
    if args.expect_canonical:
        mismatches = prof.expectation_mismatches(CANONICAL_SCHEMA)
        if mismatches:
            for name, (want, got) in sorted(mismatches.items()):
                print(f"missing count for {name}: expected {want}, got {got}", file=sys.stderr)
            return EXIT_ASSERT
    return EXIT_OK


def cmd_wrangle(args) -> int:
    cfg = _config(args)
    table = _load(cfg.dataset)
    plan, filtered, audit = prepare(table, cfg)
    try:
        fm = apply_plan(filtered, plan)
    except (WrangleError, SchemaError) as exc:
        raise StageError("wrangle", exc) from exc
    out = Path(args.out_dir)
    _write(out, "plan.json", plan.to_json() + "\n")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fm.feature_names + ["Target"])
    for row, label in zip(fm.values.tolist(), fm.labels.tolist()):
        w.writerow([repr(v) for v in row] + [label])
    _write(out, "wrangled.csv", buf.getvalue())
    lines = [f"config_hash {cfg.config_hash()}", f"seed {cfg.seed}",
             f"stage ingest: {table.n_rows} rows x {table.n_cols} columns"]
    lines += [f"stage wrangle: {x}" for x in audit + fm.audit]
    lines.append(f"stage wrangle: output {fm.n_rows} rows x {fm.n_features} features, "
                 f"{fm.missing_count()} missing cells")
    _write(out, "audit.log", _audit_text(lines))
    print(f"{fm.n_rows} rows x {fm.n_features} features")
    return EXIT_OK


def _write_fitted(out: Path, run) -> None:
    fitted = run.fitted
    _write(out, "config.json", run.config.to_json() + "\n")
    _write(out, "plan.json", run.plan.to_json() + "\n")
    _write(out, "model.json", _dump(fitted.to_dict()))
    _write(out, "scaler.json", fitted.scaler.to_json() + "\n")
    if fitted.pca is not None:
        _write(out, "pca.json", fitted.pca.to_json() + "\n")
        _write(out, "explained_variance.csv", fitted.pca.variance_csv())
    _write(out, "audit.log", _audit_text(run.audit))


def cmd_train(args) -> int:
    cfg = _config(args)
    run = run_holdout(_load(cfg.dataset), cfg, evaluate=False, cv_folds=0)
    _write_fitted(Path(args.out_dir), run)
    print(f"trained {cfg.model.kind} on {run.train.n_rows} rows x {run.train.n_features} features")
    return EXIT_OK


def _report_rows(kind: str, report, cv=None) -> list[tuple[str, str, float]]:
    rows = [(kind, k, v) for k, v in report.headline().items()]
    for c in sorted(report.f1):
        rows += [(kind, f"precision_{c}", report.precision[c]), (kind, f"recall_{c}", report.recall[c]),
                 (kind, f"f1_{c}", report.f1[c])]
    if cv is not None:
        rows += [(kind, f"cv_mean_{k}", v) for k, v in cv.summary()["mean"].items()]
    return rows


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    run = run_holdout(_load(cfg.dataset), cfg, evaluate=True)
    out = Path(args.out_dir)
    _write_fitted(out, run)
    report = run.report
    payload = report.to_dict()
    if run.cv is not None:
        payload["cv"] = run.cv.summary()
    _write(out, "report.json", _dump(payload))
    _write(out, "report.csv", report_csv(_report_rows(cfg.model.kind, report, run.cv)))
    if report.importances:
        _write(out, "importance.csv", importance_csv(report.importances))
    msg = f"{cfg.model.kind}: accuracy {report.accuracy:.4f} macro F1 {report.macro_f1:.4f}"
    if run.cv is not None:
        msg += f" | cv mean accuracy {run.cv.mean('accuracy'):.4f}"
    print(msg)
    return EXIT_OK


def cmd_cv(args) -> int:
    cfg = _config(args)
    table = _load(cfg.dataset)
    plan, filtered, audit = prepare(table, cfg)
    try:
        fm = apply_plan(filtered, plan)
    except (WrangleError, SchemaError) as exc:
        raise StageError("wrangle", exc) from exc
    folds = args.folds or cfg.eval.cv_folds or 5
    result = cross_validate(cfg, fm, folds)
    out = Path(args.out_dir)
    summary = result.summary()
    _write(out, "cv.json", _dump(summary))
    rows = [(cfg.model.kind, f"fold{f['fold']}_{k}", f[k]) for f in summary["folds"]
            for k in ("accuracy", "f1", "recall", "precision")]
    rows += [(cfg.model.kind, f"mean_{k}", v) for k, v in summary["mean"].items()]
    _write(out, "cv.csv", report_csv(rows))
    lines = [f"config_hash {cfg.config_hash()}", f"seed {cfg.seed}",
             f"stage ingest: {table.n_rows} rows x {table.n_cols} columns"]
    lines += [f"stage wrangle: {x}" for x in audit]
    lines.append(f"stage wrangle: {fm.n_rows} rows x {fm.n_features} features")
    lines += [f"stage cv: fold {f['fold']} accuracy {f['accuracy']!r}" for f in summary["folds"]]
    _write(out, "audit.log", _audit_text(lines))
    print(f"{cfg.model.kind}: {folds}-fold mean accuracy {summary['mean']['accuracy']:.4f}")
    return EXIT_OK


def cmd_importance(args) -> int:
    if args.model_file:
        try:
            d = json.loads(Path(args.model_file).read_text(encoding="utf-8"))
            model = model_from_dict(d["model"])
            names = d["model_features"]
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise InputError(f"cannot read model file: {exc}") from exc
        try:
            imp = feature_importance(model, names)
        except TypeError as exc:
            raise InputError(str(exc)) from exc
    else:
        cfg = _config(args)
        run = run_holdout(_load(cfg.dataset), cfg, evaluate=False, cv_folds=0)
        try:
            imp = feature_importance(run.fitted.model, run.fitted.model_features)
        except TypeError as exc:
            raise InputError(str(exc)) from exc
    text = importance_csv(imp)
    if args.out_dir:
        _write(Path(args.out_dir), "importance.csv", text)
    if not imp:
        print("model has no splits; importance map is empty", file=sys.stderr)
    for rank, (name, frac) in enumerate(list(imp.items())[: args.top], start=1):
        print(f"{rank:>3} {name:<24} {frac:.4f}")
    return EXIT_OK


def _common(p: argparse.ArgumentParser, out_dir: bool = True) -> None:
    p.add_argument("--config", help="JSON pipeline config")
    p.add_argument("--dataset", help="CSV dataset (overrides config)")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--model", choices=["tree", "forest", "gbt", "nb", "knn"], help="learner (overrides config)")
    p.add_argument("--pca-k", type=int, dest="pca_k", help="enable PCA with k components")
    p.add_argument("--balance", choices=["none", "undersample", "oversample", "smote", "class_weights"])
    if out_dir:
        p.add_argument("--out-dir", default="povml-out", help="output directory (default: povml-out)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="povml", description="Household poverty-level classification pipeline.")
    ap.add_argument("--threads", type=int, help="worker threads (default: POVML_THREADS or core count)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="row/column counts, missing cells, class and urban shares")
    p.add_argument("dataset")
    p.add_argument("--expect-canonical", action="store_true",
                   help="exit 4 if any missing-value count differs from the reference file")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("wrangle", help="apply the wrangling plan and write the feature table")
    _common(p)
    p.set_defaults(func=cmd_wrangle)

    p = sub.add_parser("train", help="fit the pipeline on the training split")
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="fit, score the held-out split, optionally cross-validate")
    _common(p)
    p.add_argument("--cv", type=int, help="also run k-fold CV on the training split")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation on the wrangled data")
    _common(p)
    p.add_argument("--folds", type=int, help="number of folds (default: config or 5)")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("importance", help="ranked feature importance of a tree-based model")
    _common(p)
    p.add_argument("--model-file", help="model.json written by train/evaluate")
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=cmd_importance, out_dir=None)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads is not None:
            set_threads(args.threads)
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (InputError, SchemaError, ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
