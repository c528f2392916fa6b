"""Household survey schema, CSV ingestion and profiling.

The schema is declared once, as a table of ``name role expected_missing``
lines in file order.  Names follow the published CSV header; the alternate
spellings used in the variable-description table (``Rooms``, ``Hhsize``,
``pcionatur``...) are accepted as exact aliases.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

ROLES = ("id", "binary", "discrete", "continuous", "squared", "target")
NUMERIC_ROLES = frozenset({"binary", "discrete", "continuous", "squared", "target"})

# Tokens mapped to numbers before numeric parsing.  "yes" is deliberately
# absent: in dependency/edjefe/edjefa it marks an undefined value, and the
# published missing counts (2,192 / 123 / 69) are exactly its occurrences.
DEFAULT_TOKEN_MAP: dict[str, float] = {"no": 0.0}


class SchemaError(ValueError):
    """Input does not conform to the declared schema."""


@dataclass(frozen=True)
class VariableSpec:
    name: str
    role: str
    expected_missing: int | None = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r} for column {self.name!r}")
        if self.expected_missing is not None and self.expected_missing < 0:
            raise ValueError(f"negative expected_missing for {self.name!r}")

    @property
    def numeric(self) -> bool:
        return self.role in NUMERIC_ROLES


@dataclass(frozen=True)
class Schema:
    variables: tuple[VariableSpec, ...]
    aliases: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        names = [v.name for v in self.variables]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValueError(f"duplicate column names in schema: {dupes}")
        n_target = sum(v.role == "target" for v in self.variables)
        if n_target != 1:
            raise ValueError(f"schema needs exactly one target column, found {n_target}")
        for alias, name in self.aliases.items():
            if name not in names:
                raise ValueError(f"alias {alias!r} points to unknown column {name!r}")

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    @property
    def target(self) -> str:
        return next(v.name for v in self.variables if v.role == "target")

    def __getitem__(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def __contains__(self, name: object) -> bool:
        return any(v.name == name for v in self.variables)

    def __len__(self) -> int:
        return len(self.variables)

    def subset(self, names: list[str]) -> "Schema":
        keep = set(names)
        return Schema(tuple(v for v in self.variables if v.name in keep), {})

    def resolve_header(self, header: list[str]) -> list[str]:
        """Map a CSV header onto schema names, or raise listing the mismatch."""
        resolved = [self.aliases.get(h, h) for h in header]
        known = set(self.names)
        unknown = [h for h, r in zip(header, resolved) if r not in known]
        absent = [n for n in self.names if n not in resolved]
        repeated = sorted({r for r in resolved if resolved.count(r) > 1})
        if unknown or absent or repeated:
            parts = []
            if unknown:
                parts.append(f"unknown columns {unknown}")
            if absent:
                parts.append(f"absent columns {absent}")
            if repeated:
                parts.append(f"repeated columns {repeated}")
            raise SchemaError("header mismatch: " + "; ".join(parts))
        return resolved


_CANONICAL = """
Id id 0
v2a1 continuous 6860
hacdor binary 0
rooms discrete 0
hacapo binary 0
v14a binary 0
refrig binary 0
v18q binary 0
v18q1 discrete 7342
r4h1 discrete 0
r4h2 discrete 0
r4h3 discrete 0
r4m1 discrete 0
r4m2 discrete 0
r4m3 discrete 0
r4t1 discrete 0
r4t2 discrete 0
r4t3 discrete 0
tamhog discrete 0
tamviv discrete 0
escolari discrete 0
rez_esc discrete 0
hhsize discrete 0
paredblolad binary 0
paredzocalo binary 0
paredpreb binary 0
pareddes binary 0
paredmad binary 0
paredzinc binary 0
paredfibras binary 0
paredother binary 0
pisomoscer binary 0
pisocemento binary 0
pisoother binary 0
pisonatur binary 0
pisonotiene binary 0
pisomadera binary 0
techozinc binary 0
techoentrepiso binary 0
techocane binary 0
techootro binary 0
cielorazo binary 0
abastaguadentro binary 0
abastaguafuera binary 0
abastaguano binary 0
public binary 0
planpri binary 0
noelec binary 0
coopele binary 0
sanitario1 binary 0
sanitario2 binary 0
sanitario3 binary 0
sanitario5 binary 0
sanitario6 binary 0
energcocinar1 binary 0
energcocinar2 binary 0
energcocinar3 binary 0
energcocinar4 binary 0
elimbasu1 binary 0
elimbasu2 binary 0
elimbasu3 binary 0
elimbasu4 binary 0
elimbasu5 binary 0
elimbasu6 binary 0
epared1 binary 0
epared2 binary 0
epared3 binary 0
etecho1 binary 0
etecho2 binary 0
etecho3 binary 0
eviv1 binary 0
eviv2 binary 0
eviv3 binary 0
dis binary 0
male binary 0
female binary 0
estadocivil1 binary 0
estadocivil2 binary 0
estadocivil3 binary 0
estadocivil4 binary 0
estadocivil5 binary 0
estadocivil6 binary 0
estadocivil7 binary 0
parentesco1 binary 0
parentesco2 binary 0
parentesco3 binary 0
parentesco4 binary 0
parentesco5 binary 0
parentesco6 binary 0
parentesco7 binary 0
parentesco8 binary 0
parentesco9 binary 0
parentesco10 binary 0
parentesco11 binary 0
parentesco12 binary 0
idhogar id 0
hogar_nin discrete 0
hogar_adul discrete 0
hogar_mayor discrete 0
hogar_total discrete 0
dependency continuous 2192
edjefe discrete 123
edjefa discrete 69
meaneduc continuous 5
instlevel1 binary 0
instlevel2 binary 0
instlevel3 binary 0
instlevel4 binary 0
instlevel5 binary 0
instlevel6 binary 0
instlevel7 binary 0
instlevel8 binary 0
instlevel9 binary 0
bedrooms discrete 0
overcrowding continuous 0
tipovivi1 binary 0
tipovivi2 binary 0
tipovivi3 binary 0
tipovivi4 binary 0
tipovivi5 binary 0
computer binary 0
television binary 0
mobilephone binary 0
qmobilephone discrete 0
lugar1 binary 0
lugar2 binary 0
lugar3 binary 0
lugar4 binary 0
lugar5 binary 0
lugar6 binary 0
area1 binary 0
area2 binary 0
age discrete 0
SQBescolari squared 0
SQBage squared 0
SQBhogar_total squared 0
SQBedjefe squared 0
SQBhogar_nin squared 0
SQBovercrowding squared 0
SQBdependency squared 0
SQBmeaned squared 5
agesq squared 0
Target target 0
"""

# Spellings from the printed variable table that differ from the CSV header.
_ALIASES = {
    "Rooms": "rooms",
    "Refrig": "refrig",
    "Hhsize": "hhsize",
    "pisooother": "pisoother",
    "pcionatur": "pisonatur",
    "pcionotiene": "pisonotiene",
    "Public": "public",
    "Dis": "dis",
    "Male": "male",
    "Edjefe": "edjefe",
    "Edjefa": "edjefa",
    "Age": "age",
    "Agesq": "agesq",
}


def _parse_schema_table(text: str) -> tuple[VariableSpec, ...]:
    out = []
    for line in text.strip().splitlines():
        name, role, missing = line.split()
        out.append(VariableSpec(name, role, int(missing)))
    return tuple(out)


CANONICAL_SCHEMA = Schema(_parse_schema_table(_CANONICAL), _ALIASES)


def canonical_schema() -> Schema:
    return CANONICAL_SCHEMA


class RawTable:
    """Immutable column store of parsed survey rows.

    Numeric-role columns are float64 arrays with NaN for missing cells;
    id columns are object arrays of strings with None for missing cells.
    """

    def __init__(self, schema: Schema, columns: Mapping[str, np.ndarray]):
        if set(columns) != set(schema.names):
            raise SchemaError("column set does not match schema")
        lengths = {len(c) for c in columns.values()}
        if len(lengths) > 1:
            raise SchemaError(f"ragged columns: lengths {sorted(lengths)}")
        self.schema = schema
        self._n_rows = lengths.pop() if lengths else 0
        self._columns: dict[str, np.ndarray] = {}
        for name in schema.names:
            col = np.array(columns[name], copy=True)
            col.setflags(write=False)
            self._columns[name] = col

    @property
    def n_rows(self) -> int:
        return self._n_rows

    @property
    def n_cols(self) -> int:
        return len(self.schema)

    def __len__(self) -> int:
        return self._n_rows

    def column(self, name: str) -> np.ndarray:
        return self._columns[name]

    def missing_mask(self, name: str) -> np.ndarray:
        col = self._columns[name]
        if self.schema[name].numeric:
            return np.isnan(col)
        return np.array([c is None for c in col], dtype=bool)

    def cell(self, row: int, name: str) -> float | str | None:
        value = self._columns[name][row]
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return None
        return float(value) if self.schema[name].numeric else value

    def record(self, row: int) -> dict[str, float | str | None]:
        return {name: self.cell(row, name) for name in self.schema.names}

    @property
    def rows(self) -> Iterator[dict[str, float | str | None]]:
        return (self.record(i) for i in range(self._n_rows))

    def take(self, indices) -> "RawTable":
        idx = np.asarray(indices, dtype=np.int64)
        return RawTable(self.schema, {n: c[idx] for n, c in self._columns.items()})

    def equals(self, other: "RawTable") -> bool:
        if self.schema.names != other.schema.names or self.n_rows != other.n_rows:
            return False
        for name in self.schema.names:
            a, b = self._columns[name], other._columns[name]
            if self.schema[name].numeric:
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif list(a) != list(b):
                return False
        return True


def _parse_numeric(token: str, token_map: Mapping[str, float]) -> float:
    token = token.strip()
    if token in token_map:
        return float(token_map[token])
    if not token:
        return math.nan
    try:
        return float(token)
    except ValueError:
        return math.nan


def load_csv(
    path: str | Path,
    schema: Schema = CANONICAL_SCHEMA,
    token_map: Mapping[str, float] | None = None,
) -> RawTable:
    """Parse a comma-separated UTF-8 file with a header row into a RawTable.

    Raises ``FileNotFoundError``/``OSError`` for unreadable files and
    :class:`SchemaError` for header mismatch or rows of the wrong arity.
    """
    tokens = DEFAULT_TOKEN_MAP if token_map is None else token_map
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header row") from None
        names = schema.resolve_header([h.strip() for h in header])
        numeric = [schema[n].numeric for n in names]
        raw: list[list] = [[] for _ in names]
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise SchemaError(
                    f"{path}:{lineno}: expected {len(names)} fields, got {len(row)}"
                )
            for j, token in enumerate(row):
                if numeric[j]:
                    raw[j].append(_parse_numeric(token, tokens))
                else:
                    raw[j].append(token if token != "" else None)
    columns = {}
    for j, name in enumerate(names):
        if numeric[j]:
            columns[name] = np.asarray(raw[j], dtype=np.float64)
        else:
            col = np.empty(len(raw[j]), dtype=object)
            col[:] = raw[j]
            columns[name] = col
    return RawTable(schema, columns)


@dataclass
class DatasetProfile:
    n_rows: int
    n_cols: int
    missing_by_column: dict[str, int]
    class_counts: dict[int, int]
    urban_count: int

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "missing_by_column": dict(self.missing_by_column),
            "class_counts": {str(k): v for k, v in sorted(self.class_counts.items())},
            "urban_count": self.urban_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def class_share(self, cls: int) -> float:
        return self.class_counts.get(cls, 0) / self.n_rows if self.n_rows else 0.0

    @property
    def urban_share(self) -> float:
        return self.urban_count / self.n_rows if self.n_rows else 0.0

    def expectation_mismatches(self, schema: Schema) -> dict[str, tuple[int, int]]:
        """Columns whose missing count differs from the schema's expectation."""
        out = {}
        for v in schema.variables:
            if v.expected_missing is None:
                continue
            got = self.missing_by_column.get(v.name, 0)
            if got != v.expected_missing:
                out[v.name] = (v.expected_missing, got)
        return out


def profile(table: RawTable, urban_column: str = "area1") -> DatasetProfile:
    missing = {n: int(table.missing_mask(n).sum()) for n in table.schema.names}
    target = table.column(table.schema.target)
    observed = target[~np.isnan(target)]
    classes, counts = np.unique(observed, return_counts=True)
    class_counts = {int(c): int(k) for c, k in zip(classes, counts)}
    urban = 0
    if urban_column in table.schema:
        urban = int(np.sum(table.column(urban_column) == 1))
    return DatasetProfile(table.n_rows, table.n_cols, missing, class_counts, urban)
