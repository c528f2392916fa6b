import csv
import hashlib
import json
import shutil
import subprocess
import sys

import pytest

from povml.cli import main


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _config(tmp_path, dataset, **kw):
    cfg = {"dataset": str(dataset), "seed": 7, "model": {"kind": "gbt", "params": {"iterations": 15}}}
    cfg.update(kw)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_profile_to_stdout(small_csv, capsys):
    assert main(["profile", str(small_csv)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n_rows"] == 1200 and out["n_cols"] == 143


def test_profile_expect_canonical(small_csv, reference_shaped_csv, capsys):
    assert main(["profile", str(reference_shaped_csv), "--expect-canonical"]) == 0
    assert main(["profile", str(small_csv), "--expect-canonical"]) == 4
    assert "missing count for v2a1: expected 6860" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path, capsys):
    assert main(["profile", str(tmp_path / "nope.csv")]) == 2
    assert "dataset not found" in capsys.readouterr().err


def test_schema_mismatch_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["profile", str(bad)]) == 2
    assert "header mismatch" in capsys.readouterr().err


def test_invalid_config_exit_2(tmp_path, small_csv, capsys):
    path = _config(tmp_path, small_csv, model={"kind": "svm"})
    assert main(["train", "--config", str(path)]) == 2
    (tmp_path / "broken.json").write_text("{")
    assert main(["train", "--config", str(tmp_path / "broken.json")]) == 2
    assert main(["train", "--model", "tree"]) == 2
    assert "no dataset" in capsys.readouterr().err


def test_pca_k_too_large_exit_3(tmp_path, small_csv, capsys):
    path = _config(tmp_path, small_csv, pca={"enabled": True, "k": 500})
    assert main(["train", "--config", str(path), "--out-dir", str(tmp_path / "o")]) == 3
    assert "stage 'reduce' failed" in capsys.readouterr().err


def test_train_twice_is_byte_identical(tmp_path, small_csv):
    path = _config(tmp_path, small_csv)
    outs = []
    for name in ("a", "b"):
        assert main(["train", "--config", str(path), "--out-dir", str(tmp_path / name)]) == 0
        outs.append(tmp_path / name)
    files = sorted(p.name for p in outs[0].iterdir())
    assert files == ["audit.log", "config.json", "model.json", "plan.json", "scaler.json"]
    for f in files:
        assert _digest(outs[0] / f) == _digest(outs[1] / f)


def test_train_does_not_modify_input(tmp_path, small_csv):
    before = _digest(small_csv)
    path = _config(tmp_path, small_csv)
    assert main(["train", "--config", str(path), "--out-dir", str(tmp_path / "o")]) == 0
    assert _digest(small_csv) == before


def test_audit_log_replay_fields(tmp_path, small_csv):
    path = _config(tmp_path, small_csv)
    main(["train", "--config", str(path), "--out-dir", str(tmp_path / "o")])
    audit = (tmp_path / "o" / "audit.log").read_text().splitlines()
    cfg = json.loads((tmp_path / "o" / "config.json").read_text())
    from povml.pipeline import PipelineConfig
    assert audit[0] == f"config_hash {PipelineConfig.from_dict(cfg).config_hash()}"
    assert audit[1] == "seed 7"
    assert "stage ingest: 1200 rows x 143 columns" in audit
    assert any(line.endswith("125 features (17 numeric; Target excluded)") for line in audit)
    assert any(line.startswith("stage split: train") for line in audit)


def test_evaluate_with_cv_and_pca(tmp_path, small_csv):
    path = _config(tmp_path, small_csv, pca={"enabled": True, "k": 20})
    out = tmp_path / "o"
    assert main(["evaluate", "--config", str(path), "--cv", "5", "--out-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert len(report["fold_scores"]) == 5 and len(report["cv"]["folds"]) == 5
    assert set(report["cv"]["mean"]) == {"accuracy", "f1", "recall", "precision"}
    rows = list(csv.DictReader((out / "report.csv").open()))
    assert {r["metric"] for r in rows} >= {"accuracy", "f1", "cv_mean_accuracy"}
    variance = list(csv.reader((out / "explained_variance.csv").open()))
    assert variance[0] == ["component", "explained_variance_ratio", "cumulative_ratio"]
    assert len(variance) == 126
    assert (out / "importance.csv").read_text().startswith("rank,feature,fraction\n1,pc")


def test_evaluate_reports_are_byte_identical(tmp_path, small_csv):
    path = _config(tmp_path, small_csv, model={"kind": "forest", "params": {"n_trees": 8}})
    for name, threads in (("a", "1"), ("b", "2")):
        assert main(["--threads", threads, "evaluate", "--config", str(path), "--out-dir", str(tmp_path / name)]) == 0
    for f in (tmp_path / "a").iterdir():
        assert _digest(f) == _digest(tmp_path / "b" / f.name), f.name


def test_flags_override_config(tmp_path, small_csv):
    path = _config(tmp_path, small_csv)
    out = tmp_path / "o"
    assert main(["train", "--config", str(path), "--model", "nb", "--seed", "3", "--out-dir", str(out)]) == 0
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["model"] == {"kind": "nb", "params": {}} and cfg["seed"] == 3


def test_wrangle_command(tmp_path, small_csv):
    out = tmp_path / "w"
    assert main(["wrangle", "--dataset", str(small_csv), "--out-dir", str(out)]) == 0
    with (out / "wrangled.csv").open() as fh:
        header = next(csv.reader(fh))
    assert len(header) == 126 and header[-1] == "Target"
    assert "0 missing cells" in (out / "audit.log").read_text()


def test_wrangle_plan_override(tmp_path, small_csv):
    from povml.wrangle import build_default_plan
    plan = build_default_plan().to_dict()
    plan["drop_columns"] = plan["drop_columns"] + ["computer"]
    (tmp_path / "plan.json").write_text(json.dumps(plan))
    path = _config(tmp_path, small_csv, wrangle_plan=str(tmp_path / "plan.json"))
    out = tmp_path / "w"
    assert main(["wrangle", "--config", str(path), "--out-dir", str(out)]) == 0
    assert "124 features" in (out / "audit.log").read_text()
    plan["age_bins"][0][2] = 5  # leaves a gap
    (tmp_path / "plan.json").write_text(json.dumps(plan))
    assert main(["wrangle", "--config", str(path), "--out-dir", str(out)]) == 2


def test_cv_command(tmp_path, small_csv):
    path = _config(tmp_path, small_csv, model={"kind": "knn", "params": {"k": 5}})
    out = tmp_path / "cv"
    assert main(["cv", "--config", str(path), "--folds", "4", "--out-dir", str(out)]) == 0
    summary = json.loads((out / "cv.json").read_text())
    assert [f["fold"] for f in summary["folds"]] == [1, 2, 3, 4]


def test_importance_from_model_file(tmp_path, small_csv, capsys):
    path = _config(tmp_path, small_csv)
    out = tmp_path / "o"
    main(["train", "--config", str(path), "--out-dir", str(out)])
    capsys.readouterr()
    assert main(["importance", "--model-file", str(out / "model.json"), "--top", "3",
                 "--out-dir", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and lines[0].split()[0] == "1"
    ranked = list(csv.DictReader((out / "importance.csv").open()))
    assert abs(sum(float(r["fraction"]) for r in ranked) - 1.0) < 1e-9
    main(["train", "--config", str(path), "--model", "nb", "--out-dir", str(tmp_path / "nb")])
    assert main(["importance", "--model-file", str(tmp_path / "nb" / "model.json")]) == 2


def test_console_script_and_env_threads(tmp_path, small_csv):
    exe = shutil.which("povml")
    cmd = [exe] if exe else [sys.executable, "-m", "povml.cli"]
    proc = subprocess.run(cmd + ["profile", str(tmp_path / "absent.csv")], capture_output=True, text=True)
    assert proc.returncode == 2 and "dataset not found" in proc.stderr
    proc = subprocess.run(cmd + ["profile", str(small_csv)], capture_output=True, text=True,
                          env={"POVML_THREADS": "2", "PATH": "/usr/bin:/bin"})
    assert proc.returncode == 0


def test_synthetic_module_entry_point(tmp_path):
    out = tmp_path / "s.csv"
    proc = subprocess.run([sys.executable, "-m", "povml.synthetic", str(out), "--rows", "50"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert len(out.read_text().splitlines()) == 51
