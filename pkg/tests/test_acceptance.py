"""Acceptance criteria, one test each, with a one-line verdict per criterion.

Criteria 1-5 need the public household survey file; point POVML_DATASET at
it.  Without it they are reported as SKIP.  Criteria 6 and 7 run anywhere.

    POVML_DATASET=/path/to/train.csv pytest tests/test_acceptance.py -v -s
"""

import hashlib
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from povml.cli import main
from povml.pipeline import PipelineConfig, prepare, run_holdout
from povml.schema import load_csv, profile
from povml.wrangle import NUMERIC_FEATURES, apply_plan

ROOT = Path(__file__).resolve().parent

EXPECTED_MISSING = {
    "v2a1": 6860, "v18q1": 7342, "dependency": 2192, "edjefe": 123,
    "edjefa": 69, "meaneduc": 5, "SQBmeaned": 5,
}
# (accuracy, macro F1) reference points in percent, and their tolerances
HOLDOUT_TARGETS = {"forest": (78.1, 64.9), "gbt": (79.6, 68.4)}
HOLDOUT_TOL = (4.0, 6.0)
CV_TARGETS = {"forest": 76.0, "gbt": 77.6}
CV_TOL = 4.0
SWEEP_SEEDS = (0, 1, 2, 3, 4)
SWEEP_BUDGET_S = 15 * 60
PROPERTY_FILES = ["test_scale.py", "test_reduce.py", "test_tree.py", "test_learners.py",
                  "test_balance.py", "test_evaluate.py"]

VERDICTS: dict[int, str] = {}


def _verdict(n: int, status: str, detail: str) -> None:
    line = f"criterion {n}: {status} - {detail}"
    VERDICTS[n] = line
    print(line)


@pytest.fixture(scope="module", autouse=True)
def _summary(request):
    yield
    reporter = request.config.pluginmanager.getplugin("terminalreporter")
    if reporter is None:
        return
    reporter.write_line("")
    for n in sorted(VERDICTS):
        reporter.write_line(VERDICTS[n])


def _need_dataset(n: int, dataset_path):
    if dataset_path is None:
        _verdict(n, "SKIP", "POVML_DATASET not set; the survey file is required")
        pytest.skip("POVML_DATASET not set")
    if not dataset_path.exists():
        _verdict(n, "FAIL", f"POVML_DATASET points at a missing file: {dataset_path}")
        pytest.fail(f"missing dataset {dataset_path}")


def _check(n: int, problems: list[str], detail: str) -> None:
    if problems:
        _verdict(n, "FAIL", "; ".join(problems))
        pytest.fail("; ".join(problems))
    _verdict(n, "PASS", detail)


def test_criterion_1_profile(dataset_path):
    _need_dataset(1, dataset_path)
    t0 = time.perf_counter()
    prof = profile(load_csv(dataset_path))
    elapsed = time.perf_counter() - t0
    problems = []
    if (prof.n_rows, prof.n_cols) != (9557, 143):
        problems.append(f"shape {prof.n_rows}x{prof.n_cols} != 9557x143")
    for name, want in EXPECTED_MISSING.items():
        got = prof.missing_by_column.get(name)
        if got != want:
            problems.append(f"missing {name} {got} != {want}")
    others = {k: v for k, v in prof.missing_by_column.items() if v and k not in EXPECTED_MISSING}
    if others:
        problems.append(f"unexpected missing values {others}")
    share4 = 100 * prof.class_share(4)
    urban = 100 * prof.urban_count / prof.n_rows
    if abs(share4 - 62.7) > 0.1:
        problems.append(f"class-4 share {share4:.2f}% not within 62.7+-0.1")
    if abs(urban - 71.4) > 0.1:
        problems.append(f"urban share {urban:.2f}% not within 71.4+-0.1")
    if elapsed >= 5:
        problems.append(f"runtime {elapsed:.2f}s >= 5s")
    _check(1, problems, f"9557x143, missing counts exact, class-4 {share4:.2f}%, "
                        f"urban {urban:.2f}%, {elapsed:.2f}s")


def test_criterion_2_wrangle(dataset_path):
    _need_dataset(2, dataset_path)
    t0 = time.perf_counter()
    table = load_csv(dataset_path)
    plan, filtered, _ = prepare(table, PipelineConfig(dataset=str(dataset_path)))
    matrix = apply_plan(filtered, plan)
    elapsed = time.perf_counter() - t0
    problems = []
    if len(matrix.feature_names) != 125:
        problems.append(f"{len(matrix.feature_names)} features != 125")
    if matrix.n_rows != 9473:
        problems.append(f"{matrix.n_rows} rows != 9473")
    n_missing = int(np.isnan(matrix.values).sum())
    if n_missing:
        problems.append(f"{n_missing} missing cells")
    if sorted(matrix.numeric_feature_names) != sorted(NUMERIC_FEATURES):
        problems.append(f"numeric columns {sorted(matrix.numeric_feature_names)}")
    if elapsed >= 10:
        problems.append(f"runtime {elapsed:.2f}s >= 10s")
    _check(2, problems, f"{matrix.n_rows} rows x {len(matrix.feature_names)} features, "
                        f"0 missing, 17 numeric, {elapsed:.2f}s")


@pytest.fixture(scope="module")
def sweep(dataset_path):
    """Holdout runs for every seed, model and PCA setting; 5-fold CV rides on seed 0 without PCA."""
    if dataset_path is None or not dataset_path.exists():
        return None
    t0 = time.perf_counter()
    table = load_csv(dataset_path)
    runs = {}
    for seed in SWEEP_SEEDS:
        for pca in (False, True):
            for kind in ("forest", "gbt"):
                cfg = PipelineConfig.from_dict({
                    "dataset": str(dataset_path), "seed": seed,
                    "model": {"kind": kind}, "pca": {"enabled": pca, "k": 60},
                })
                cv = 5 if (seed == SWEEP_SEEDS[0] and not pca) else None
                runs[seed, pca, kind] = run_holdout(table, cfg, cv_folds=cv)
    return {"runs": runs, "elapsed": time.perf_counter() - t0}


def test_criterion_3_holdout_sweep(dataset_path, sweep):
    _need_dataset(3, dataset_path)
    runs, elapsed = sweep["runs"], sweep["elapsed"]
    problems, parts = [], []
    for kind, (acc_ref, f1_ref) in HOLDOUT_TARGETS.items():
        ok_configs = []
        for pca in (False, True):
            acc = 100 * np.mean([runs[s, pca, kind].report.accuracy for s in SWEEP_SEEDS])
            f1 = 100 * np.mean([runs[s, pca, kind].report.macro_f1 for s in SWEEP_SEEDS])
            label = "pca60" if pca else "nopca"
            parts.append(f"{kind}/{label} acc {acc:.1f} F1 {f1:.1f}")
            if abs(acc - acc_ref) <= HOLDOUT_TOL[0] and abs(f1 - f1_ref) <= HOLDOUT_TOL[1]:
                ok_configs.append(label)
        if not ok_configs:
            problems.append(f"{kind}: no config within acc {acc_ref}+-4 and F1 {f1_ref}+-6")
    if elapsed >= SWEEP_BUDGET_S:
        problems.append(f"sweep runtime {elapsed:.0f}s >= {SWEEP_BUDGET_S}s")
    summary = ", ".join(parts) + f", {elapsed:.0f}s"
    _check(3, [p + f" ({summary})" for p in problems], summary)


def test_criterion_4_cross_validation(dataset_path, sweep):
    _need_dataset(4, dataset_path)
    problems, parts = [], []
    for kind, ref in CV_TARGETS.items():
        cv = sweep["runs"][SWEEP_SEEDS[0], False, kind].cv
        acc = 100 * cv.mean("accuracy")
        parts.append(f"{kind} cv acc {acc:.1f}")
        if abs(acc - ref) > CV_TOL:
            problems.append(f"{kind} mean CV accuracy {acc:.1f} not within {ref}+-4")
    _check(4, problems, ", ".join(parts))


def test_criterion_5_importance(dataset_path, sweep):
    _need_dataset(5, dataset_path)
    imp = sweep["runs"][SWEEP_SEEDS[0], False, "gbt"].report.importances
    ranked = sorted(imp, key=lambda k: (-imp[k], k))
    rank = ranked.index("meaneduc") + 1 if "meaneduc" in ranked else None
    problems = [] if rank is not None and rank <= 3 else [f"meaneduc rank {rank}; top 3 {ranked[:3]}"]
    _check(5, problems, f"meaneduc rank {rank}; top 3 {ranked[:3]}")


def test_criterion_6_property_suite():
    cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
           *[str(ROOT / f) for f in PROPERTY_FILES]]
    t0 = time.perf_counter()
    proc = subprocess.run(cmd, capture_output=True, text=True, cwd=ROOT.parent)
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    problems = []
    if proc.returncode != 0:
        problems.append(f"property suite failed: {tail}")
    if elapsed >= 60:
        problems.append(f"runtime {elapsed:.1f}s >= 60s")
    _check(6, problems, f"{tail} ({elapsed:.1f}s wall)")


def _digests(out: Path) -> dict[str, str]:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(out.iterdir())}


def test_criterion_7_determinism(tmp_path, small_csv):
    problems, checked = [], 0
    for kind, params in (("forest", {"n_trees": 20}), ("gbt", {"iterations": 20})):
        cfg = tmp_path / f"{kind}.json"
        cfg.write_text(json.dumps({"dataset": str(small_csv), "seed": 3,
                                   "model": {"kind": kind, "params": params},
                                   "pca": {"enabled": True, "k": 10}}))
        digests = []
        for run, threads in ((1, "1"), (2, "2")):
            out = tmp_path / f"{kind}-{run}"
            code = main(["--threads", threads, "evaluate", "--config", str(cfg),
                         "--cv", "3", "--out-dir", str(out)])
            if code != 0:
                problems.append(f"{kind} run {run} exited {code}")
            digests.append(_digests(out))
        if digests[0] != digests[1]:
            diff = sorted(k for k in digests[0].keys() | digests[1].keys()
                          if digests[0].get(k) != digests[1].get(k))
            problems.append(f"{kind}: files differ {diff}")
        checked += len(digests[0])
    _check(7, problems, f"{checked} model/report files byte-identical across repeated runs")
