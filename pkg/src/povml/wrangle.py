"""Cleaning and wrangling: raw survey table to model-ready feature matrix.

The rules live in a :class:`WranglePlan` so that they can be serialized,
diffed and varied in tests.  :func:`apply_plan` runs them in a fixed order:

1. drop rows that no member of a declared group applies to, and rows whose
   group membership is contradictory (more than one member set);
2. drop redundant / identifier / squared columns;
3. re-encode every merge group as one 0/1 dummy per member and bin age;
4. fill missing values with medians of the observed values.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .matrix import FeatureMatrix
from .schema import RawTable, SchemaError

logger = logging.getLogger(__name__)


class WrangleError(ValueError):
    """Input rows are unusable (for example a row without a Target)."""


@dataclass(frozen=True)
class MergeGroup:
    name: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class AgeBin:
    label: str
    lower: int
    upper: int


@dataclass(frozen=True)
class RowRule:
    group: str
    rule: str = "all members zero"
    expected_rows: int | None = None


@dataclass
class WranglePlan:
    drop_columns: list[str]
    merge_groups: list[MergeGroup]
    age_bins: list[AgeBin]
    impute_median_columns: list[str]
    drop_row_rules: list[RowRule]
    numeric_features: list[str]
    age_column: str = "age"
    target: str = "Target"
    id_column: str | None = "Id"
    # what to do with missing cells in retained columns not listed for imputation
    unlisted_missing: str = "median"

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        seen: dict[str, str] = {}
        for g in self.merge_groups:
            for m in g.members:
                if m in seen:
                    raise ValueError(f"column {m!r} in merge groups {seen[m]!r} and {g.name!r}")
                seen[m] = g.name
        names = [g.name for g in self.merge_groups]
        if len(set(names)) != len(names):
            raise ValueError("duplicate merge group names")
        for r in self.drop_row_rules:
            if r.group not in names:
                raise ValueError(f"row rule refers to unknown group {r.group!r}")
            if r.rule != "all members zero":
                raise ValueError(f"unsupported row rule {r.rule!r}")
        if self.age_bins:
            bins = self.age_bins
            if bins[0].lower != 0 or bins[-1].upper != 100:
                raise ValueError("age bins must cover 0-100")
            for a, b in zip(bins, bins[1:]):
                if b.lower != a.upper + 1:
                    raise ValueError(f"age bins {a.label!r}/{b.label!r} leave a gap or overlap")
            for b in bins:
                if b.upper < b.lower:
                    raise ValueError(f"age bin {b.label!r} is empty")
        if self.unlisted_missing not in ("median", "error"):
            raise ValueError("unlisted_missing must be 'median' or 'error'")

    def group(self, name: str) -> MergeGroup:
        return next(g for g in self.merge_groups if g.name == name)

    def referenced_columns(self) -> set[str]:
        cols = set(self.drop_columns) | set(self.impute_median_columns) | set(self.numeric_features)
        for g in self.merge_groups:
            cols.update(g.members)
        cols.add(self.target)
        if self.age_bins:
            cols.add(self.age_column)
        return cols

    def to_dict(self) -> dict:
        d = asdict(self)
        d["merge_groups"] = [[g.name, list(g.members)] for g in self.merge_groups]
        d["age_bins"] = [[b.label, b.lower, b.upper] for b in self.age_bins]
        d["drop_row_rules"] = [[r.group, r.rule, r.expected_rows] for r in self.drop_row_rules]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "WranglePlan":
        d = dict(d)
        d["merge_groups"] = [MergeGroup(n, tuple(m)) for n, m in d["merge_groups"]]
        d["age_bins"] = [AgeBin(l, int(lo), int(hi)) for l, lo, hi in d["age_bins"]]
        d["drop_row_rules"] = [RowRule(*r) for r in d["drop_row_rules"]]
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "WranglePlan":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "WranglePlan":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


NUMERIC_FEATURES = [
    "rooms", "r4h1", "r4h2", "r4h3", "r4m1", "r4m2", "r4m3", "r4t1", "r4t2", "r4t3",
    "escolari", "rez_esc", "dependency", "edjefe", "edjefa", "meaneduc", "overcrowding",
]

DEFAULT_AGE_BINS = [
    AgeBin("children", 0, 12),
    AgeBin("adolescents", 13, 17),
    AgeBin("young_adults", 18, 29),
    AgeBin("adults", 30, 44),
    AgeBin("middle_aged_adults", 45, 64),
    AgeBin("old_adults", 65, 100),
]


def _numbered(prefix: str, numbers) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in numbers)


def build_default_plan() -> WranglePlan:
    groups = [
        MergeGroup("walls", ("paredblolad", "paredzocalo", "paredpreb", "pareddes",
                             "paredmad", "paredzinc", "paredfibras", "paredother")),
        MergeGroup("floor", ("pisomoscer", "pisocemento", "pisoother", "pisonatur",
                             "pisonotiene", "pisomadera")),
        MergeGroup("roof", ("techozinc", "techoentrepiso", "techocane", "techootro")),
        MergeGroup("water", ("abastaguadentro", "abastaguafuera", "abastaguano")),
        MergeGroup("electricity", ("public", "planpri", "noelec", "coopele")),
        MergeGroup("sanitation", _numbered("sanitario", (1, 2, 3, 5, 6))),
        MergeGroup("cooking_energy", _numbered("energcocinar", range(1, 5))),
        MergeGroup("rubbish", _numbered("elimbasu", range(1, 7))),
        MergeGroup("wall_quality", _numbered("epared", range(1, 4))),
        MergeGroup("roof_quality", _numbered("etecho", range(1, 4))),
        MergeGroup("floor_quality", _numbered("eviv", range(1, 4))),
        MergeGroup("sex", ("male", "female")),
        MergeGroup("civil_status", _numbered("estadocivil", range(1, 8))),
        MergeGroup("household_role", _numbered("parentesco", range(1, 13))),
        MergeGroup("education_level", _numbered("instlevel", range(1, 10))),
        MergeGroup("dwelling_ownership", _numbered("tipovivi", range(1, 6))),
        MergeGroup("region", _numbered("lugar", range(1, 7))),
        MergeGroup("area", ("area1", "area2")),
    ]
    drop = [
        "Id", "idhogar",
        "v2a1", "v18q1",
        # household size duplicates of r4t3
        "tamhog", "tamviv", "hhsize", "hogar_total",
        # overlapping counts of r4* and redundant counts of retained flags
        "hogar_nin", "hogar_adul", "hogar_mayor", "bedrooms", "qmobilephone",
        "SQBescolari", "SQBage", "SQBhogar_total", "SQBedjefe", "SQBhogar_nin",
        "SQBovercrowding", "SQBdependency", "SQBmeaned", "agesq",
    ]
    rules = [
        RowRule("roof", expected_rows=66),
        RowRule("electricity", expected_rows=15),
        RowRule("education_level", expected_rows=3),
    ]
    return WranglePlan(
        drop_columns=drop,
        merge_groups=groups,
        age_bins=list(DEFAULT_AGE_BINS),
        impute_median_columns=["dependency", "edjefe", "edjefa", "meaneduc"],
        drop_row_rules=rules,
        numeric_features=list(NUMERIC_FEATURES),
    )


def median(values) -> float:
    """Order-statistic median; the mean of the central pair for even counts."""
    data = np.asarray(values, dtype=np.float64).ravel()
    if data.size == 0:
        raise ValueError("median of empty input")
    return float(np.median(data))


def _row_label(table: RawTable, plan: WranglePlan, row: int) -> str:
    if plan.id_column and plan.id_column in table.schema:
        ident = table.cell(row, plan.id_column)
        if ident is not None:
            return f"row {row} (id {ident})"
    return f"row {row}"


def _check_conforms(table, plan: WranglePlan) -> None:
    if not isinstance(table, RawTable):
        raise SchemaError(f"apply_plan expects a RawTable, got {type(table).__name__}")
    missing = sorted(c for c in plan.referenced_columns() if c not in table.schema)
    if missing:
        raise SchemaError(f"table does not match wrangle plan; absent columns {missing}")


def filter_rows(table: RawTable, plan: WranglePlan) -> tuple[np.ndarray, list[str]]:
    """Indices of rows that survive the row rules, plus an audit trail.

    Every dropped row is named in the audit.  Rows failing a declared
    ``all members zero`` rule are dropped silently apart from the audit;
    rows that are multi-hot (or all-zero in a group without a rule) are
    contradictory and additionally logged as warnings.
    """
    _check_conforms(table, plan)
    target = table.column(plan.target)
    bad_target = np.flatnonzero(np.isnan(target))
    if len(bad_target):
        raise WrangleError(
            f"{len(bad_target)} rows have a missing {plan.target}, e.g. "
            + _row_label(table, plan, int(bad_target[0]))
        )
    n = table.n_rows
    keep = np.ones(n, dtype=bool)
    audit: list[str] = []
    ruled = {r.group: r for r in plan.drop_row_rules}
    for g in plan.merge_groups:
        block = np.column_stack([table.column(m) for m in g.members]) if n else np.zeros((0, len(g.members)))
        has_nan = np.isnan(block).any(axis=1)
        total = np.nansum(block, axis=1)
        zero = (total == 0) & ~has_nan
        contradictory = (total > 1) | has_nan
        if g.name in ruled:
            rule = ruled[g.name]
            hit = np.flatnonzero(zero & keep)
            note = f" (expected {rule.expected_rows})" if rule.expected_rows is not None else ""
            audit.append(f"row rule {g.name}: all members zero -> {len(hit)} rows dropped{note}")
            for i in hit:
                audit.append(f"  drop {_row_label(table, plan, int(i))}: no {g.name} member applies")
            keep[hit] = False
        else:
            contradictory |= zero
        hit = np.flatnonzero(contradictory & keep)
        if len(hit):
            logger.warning("%d rows with contradictory %s membership dropped", len(hit), g.name)
            audit.append(f"contradictory {g.name}: {len(hit)} rows dropped")
            for i in hit:
                audit.append(f"  drop {_row_label(table, plan, int(i))}: {g.name} members sum to {total[i]:g}")
            keep[hit] = False
    return np.flatnonzero(keep), audit


def _age_dummies(age: np.ndarray, bins: list[AgeBin]) -> np.ndarray:
    if np.isnan(age).any():
        raise WrangleError("age has missing values; cannot bin")
    lo, hi = bins[0].lower, bins[-1].upper
    if len(age) and (age.min() < lo or age.max() > hi):
        raise WrangleError(f"age outside binned range {lo}-{hi}")
    uppers = np.array([b.upper for b in bins], dtype=np.float64)
    # fractional ages fall into the bin whose upper bound they do not exceed
    which = np.searchsorted(uppers, age, side="left")
    out = np.zeros((len(age), len(bins)))
    out[np.arange(len(age)), which] = 1.0
    return out


def apply_plan(
    table: RawTable,
    plan: WranglePlan,
    medians: dict[str, float] | None = None,
) -> FeatureMatrix:
    """Wrangle ``table`` into a complete feature matrix.

    ``medians`` fixes imputation values (e.g. from a training split); when
    omitted they are computed from the observed values of the kept rows.
    The result carries the medians of every retained column, so that a
    held-out split can be filled without looking at its own values, and an
    audit trail.
    """
    kept, audit = filter_rows(table, plan)
    dropped_cols = set(plan.drop_columns)
    audit.insert(0, f"input: {table.n_rows} rows x {table.n_cols} columns")
    audit.append(f"rows kept: {len(kept)} of {table.n_rows}")
    for c in plan.drop_columns:
        if c in table.schema:
            audit.append(f"drop column {c}")

    names: list[str] = []
    blocks: list[np.ndarray] = []
    for var in table.schema.variables:
        name = var.name
        if name in dropped_cols or name == plan.target:
            continue
        if var.role == "id":
            raise SchemaError(f"identifier column {name!r} is not dropped by the plan")
        col = table.column(name)[kept]
        if name == plan.age_column and plan.age_bins:
            blocks.append(_age_dummies(col, plan.age_bins))
            names.extend(f"{name}_{b.label}" for b in plan.age_bins)
            continue
        names.append(name)
        blocks.append(col.reshape(-1, 1))
    values = np.hstack(blocks) if blocks else np.zeros((len(kept), 0))

    used: dict[str, float] = {}
    listed = set(plan.impute_median_columns)
    for j, name in enumerate(names):
        mask = np.isnan(values[:, j])
        given = medians is not None and name in medians
        if name not in listed and not mask.any():
            if medians is None and len(values):
                # kept so a held-out split can be filled with these values
                used[name] = median(values[:, j])
            continue
        if name not in listed and plan.unlisted_missing == "error":
            raise WrangleError(f"column {name!r} has {int(mask.sum())} missing cells and no imputation rule")
        if given:
            fill = float(medians[name])
        else:
            observed = values[~mask, j]
            if len(observed) == 0:
                if not mask.any():
                    continue
                raise WrangleError(f"column {name!r} has no observed values to take a median of")
            fill = median(observed)
        used[name] = fill
        if mask.any():
            values[mask, j] = fill
            kind = "planned" if name in listed else "unplanned"
            audit.append(f"impute {name}: {int(mask.sum())} cells <- median {fill:g} ({kind})")

    labels = table.column(plan.target)[kept].astype(np.int64)
    numeric = [n for n in plan.numeric_features if n in names]
    audit.append(f"features: {len(names)} (Target excluded from the feature count)")
    audit.append(f"numeric features: {len(numeric)}")
    return FeatureMatrix(names, values, labels, numeric, audit, used)
