import numpy as np
import pytest
from hypothesis import given, strategies as st

from povml.schema import CANONICAL_SCHEMA, RawTable, SchemaError, load_csv
from povml.wrangle import (
    AgeBin,
    MergeGroup,
    NUMERIC_FEATURES,
    WrangleError,
    WranglePlan,
    _age_dummies,
    apply_plan,
    build_default_plan,
    filter_rows,
    median,
)


@pytest.fixture(scope="module")
def plan():
    return build_default_plan()


def test_default_plan_contents(plan):
    rules = {r.group: r.expected_rows for r in plan.drop_row_rules}
    assert rules == {"roof": 66, "electricity": 15, "education_level": 3}
    assert set(plan.impute_median_columns) == {"dependency", "edjefe", "edjefa", "meaneduc"}
    assert len(plan.age_bins) == 6
    assert len(plan.numeric_features) == 17
    assert "r4t3" in plan.numeric_features and "hhsize" in plan.drop_columns
    assert all(c in plan.drop_columns for c in CANONICAL_SCHEMA.names if c.startswith("SQB"))


def test_plan_json_round_trip(plan, tmp_path):
    path = tmp_path / "plan.json"
    path.write_text(plan.to_json())
    again = WranglePlan.load(path)
    assert again.to_dict() == plan.to_dict()


def test_plan_validation_rejects_overlapping_groups(plan):
    d = plan.to_dict()
    d["merge_groups"].append(["dup", ["area1", "area2"]])
    with pytest.raises(ValueError, match="'area1' in merge groups 'area' and 'dup'"):
        WranglePlan.from_dict(d)


def test_plan_validation_rejects_gap_in_age_bins(plan):
    d = plan.to_dict()
    d["age_bins"][1][1] = 14
    with pytest.raises(ValueError, match="gap or overlap"):
        WranglePlan.from_dict(d)


@pytest.mark.parametrize("values, expected", [([1, 2, 4], 2), ([1, 2, 3, 4], 2.5), ([7], 7)])
def test_median_examples(values, expected):
    assert median(values) == expected


def test_median_empty_raises():
    with pytest.raises(ValueError):
        median([])


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=40))
def test_median_splits_sample_in_half(xs):
    m = median(xs)
    assert sum(x < m for x in xs) <= len(xs) // 2
    assert sum(x > m for x in xs) <= len(xs) // 2


def test_age_bins_one_label_each():
    bins = build_default_plan().age_bins
    dummies = _age_dummies(np.array([5.0, 15, 25, 40, 55, 70]), bins)
    assert (dummies == np.eye(6)).all()


def test_age_bin_edges_and_range():
    bins = build_default_plan().age_bins
    d = _age_dummies(np.array([0.0, 12, 13, 17, 18, 64, 65, 100, 12.5]), bins)
    assert d.argmax(axis=1).tolist() == [0, 0, 1, 1, 2, 4, 5, 5, 1]
    with pytest.raises(WrangleError):
        _age_dummies(np.array([101.0]), bins)


def _tiny_plan():
    return WranglePlan(
        drop_columns=["Id"],
        merge_groups=[MergeGroup("g", ("g1", "g2"))],
        age_bins=[AgeBin("young", 0, 49), AgeBin("old", 50, 100)],
        impute_median_columns=["dependency"],
        drop_row_rules=[],
        numeric_features=["dependency"],
    )


def _tiny_table(dependency, g1, g2, age, target):
    from povml.schema import Schema, VariableSpec
    schema = Schema((VariableSpec("Id", "id"), VariableSpec("dependency", "continuous"),
                     VariableSpec("g1", "binary"), VariableSpec("g2", "binary"),
                     VariableSpec("age", "discrete"), VariableSpec("Target", "target")))
    n = len(target)
    ids = np.empty(n, dtype=object)
    ids[:] = [f"r{i}" for i in range(n)]
    return RawTable(schema, {"Id": ids, "dependency": np.array(dependency, float),
                             "g1": np.array(g1, float), "g2": np.array(g2, float),
                             "age": np.array(age, float), "Target": np.array(target, float)})


def test_dependency_median_fill():
    t = _tiny_table([0, 0.5, 1, np.nan], [1, 0, 1, 0], [0, 1, 0, 1], [5, 60, 30, 90], [1, 2, 3, 4])
    fm = apply_plan(t, _tiny_plan())
    assert fm.column("dependency").tolist() == [0, 0.5, 1, 0.5]
    assert fm.feature_names == ["dependency", "g1", "g2", "age_young", "age_old"]
    assert fm.medians["dependency"] == 0.5
    assert any("impute dependency: 1 cells <- median 0.5 (planned)" in a for a in fm.audit)


def test_given_medians_are_used_for_held_out_rows():
    t = _tiny_table([np.nan, 3.0], [1, 0], [0, 1], [5, 60], [1, 2])
    fm = apply_plan(t, _tiny_plan(), medians={"dependency": 0.25})
    assert fm.column("dependency").tolist() == [0.25, 3.0]


def test_contradictory_rows_are_dropped_and_audited(caplog):
    t = _tiny_table([0, 0.5, 1], [1, 1, 0], [0, 1, 0], [5, 60, 30], [1, 2, 3])
    kept, audit = filter_rows(t, _tiny_plan())
    assert kept.tolist() == [0]
    assert any("row 1 (id r1)" in a for a in audit) and any("row 2 (id r2)" in a for a in audit)
    assert "contradictory" in caplog.text


def test_missing_target_is_an_error():
    t = _tiny_table([0.0], [1], [0], [5], [np.nan])
    with pytest.raises(WrangleError, match="missing Target"):
        filter_rows(t, _tiny_plan())


def test_non_conforming_input_rejected():
    with pytest.raises(SchemaError):
        apply_plan({"not": "a table"}, _tiny_plan())
    t = _tiny_table([0.0], [1], [0], [5], [1])
    bad = build_default_plan()
    with pytest.raises(SchemaError, match="absent columns"):
        apply_plan(t, bad)


def test_unlisted_missing_policy_error():
    d = _tiny_plan().to_dict()
    d["impute_median_columns"] = []
    d["unlisted_missing"] = "error"
    t = _tiny_table([np.nan, 1.0], [1, 0], [0, 1], [5, 60], [1, 2])
    with pytest.raises(WrangleError, match="no imputation rule"):
        apply_plan(t, WranglePlan.from_dict(d))


def test_reference_shaped_file(reference_shaped_csv):
    table = load_csv(reference_shaped_csv)
    fm = apply_plan(table, build_default_plan())
    assert fm.n_rows == 9557 - (66 + 15 + 3)
    assert fm.n_features == 125
    assert fm.missing_count() == 0
    assert fm.numeric_feature_names == NUMERIC_FEATURES
    assert "Target" not in fm.feature_names
    assert sum(n.startswith("age_") for n in fm.feature_names) == 6


def test_wrangling_is_deterministic(small_csv):
    table = load_csv(small_csv)
    a = apply_plan(table, build_default_plan())
    b = apply_plan(table, build_default_plan())
    assert np.array_equal(a.values, b.values) and a.audit == b.audit
