"""Synthetic household data in the canonical 143-column layout.

Useful for tests, smoke runs and timing when the survey file is not at
hand.  Counts are scaled from the published file (9,557 rows): at
``n_rows=9557`` the missing-value counts, class counts, urban count and
the 66/15/3 inapplicable rows all match it exactly.  The values
themselves are invented; a latent welfare score drives education,
housing quality and the Target so that models have signal to learn.

    python -m povml.synthetic out.csv --rows 2000 --seed 1
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .schema import CANONICAL_SCHEMA
from .wrangle import build_default_plan

logger = logging.getLogger(__name__)

REFERENCE_ROWS = 9557
REFERENCE_CLASS_COUNTS = {1: 755, 2: 1597, 3: 1209, 4: 5996}
REFERENCE_URBAN = 6829
REFERENCE_MISSING = {
    "v2a1": 6860, "v18q1": 7342, "dependency": 2192, "edjefe": 123,
    "edjefa": 69, "meaneduc": 5,
}
REFERENCE_INAPPLICABLE = {"roof": 66, "electricity": 15, "education_level": 3}


def _scaled(count: int, n: int) -> int:
    return int(np.floor(count * n / REFERENCE_ROWS + 0.5))


def _class_counts(n: int) -> dict[int, int]:
    exact = {c: k * n / REFERENCE_ROWS for c, k in REFERENCE_CLASS_COUNTS.items()}
    alloc = {c: int(np.floor(v)) for c, v in exact.items()}
    short = n - sum(alloc.values())
    for c in sorted(exact, key=lambda c: (-(exact[c] - alloc[c]), c))[:short]:
        alloc[c] += 1
    return alloc


def _pick(rng, n, weights_by_row: np.ndarray) -> np.ndarray:
    """Draw one category per row from row-wise (unnormalized) weights."""
    p = weights_by_row / weights_by_row.sum(axis=1, keepdims=True)
    u = rng.random(n)[:, None]
    return np.minimum((np.cumsum(p, axis=1) < u).sum(axis=1), p.shape[1] - 1)


def generate(n_rows: int = 2000, seed: int = 0) -> dict[str, list]:
    """Return column name -> list of CSV tokens, in canonical order."""
    if n_rows < 40:
        raise ValueError("need at least 40 rows")
    rng = np.random.default_rng(seed)
    n = n_rows
    cols: dict[str, np.ndarray | list] = {}

    # Target by rank of a noisy welfare score
    welfare = rng.normal(size=n)
    counts = _class_counts(n)
    noisy = welfare + rng.normal(scale=0.6, size=n)
    order = np.argsort(noisy, kind="stable")
    target = np.empty(n, dtype=np.int64)
    start = 0
    for c in (1, 2, 3, 4):
        target[order[start:start + counts[c]]] = c
        start += counts[c]
    z = (welfare - welfare.mean()) / welfare.std()

    cols["Id"] = [f"ID_{i:07x}" for i in range(n)]
    hh = np.cumsum(rng.random(n) < 0.35)
    cols["idhogar"] = [f"{h:09x}" for h in hh]

    size = np.clip(np.round(4 - 0.8 * z + rng.normal(scale=1.2, size=n)), 1, 12).astype(int)
    males = rng.binomial(size, 0.5)
    females = size - males
    kids_m = rng.binomial(males, 0.35)
    kids_f = rng.binomial(females, 0.35)
    cols.update(r4h1=kids_m, r4h2=males - kids_m, r4h3=males, r4m1=kids_f,
                r4m2=females - kids_f, r4m3=females, r4t1=kids_m + kids_f,
                r4t2=size - kids_m - kids_f, r4t3=size)
    for name in ("tamhog", "tamviv", "hhsize", "hogar_total"):
        cols[name] = size
    cols["hogar_nin"] = kids_m + kids_f
    elders = rng.binomial(size - kids_m - kids_f, 0.1)
    cols["hogar_mayor"] = elders
    cols["hogar_adul"] = size - kids_m - kids_f
    rooms = np.clip(np.round(4 + 0.9 * z + rng.normal(scale=1.0, size=n)), 1, 11).astype(int)
    cols["rooms"] = rooms
    cols["bedrooms"] = np.clip(rooms - rng.integers(0, 3, n), 1, None)
    cols["overcrowding"] = np.round(size / cols["bedrooms"], 6)
    cols["hacdor"] = (cols["overcrowding"] > 3).astype(int)
    cols["hacapo"] = (size / rooms > 2).astype(int)
    cols["v14a"] = (rng.random(n) < 0.99).astype(int)
    cols["refrig"] = (rng.random(n) < 0.9 + 0.05 * np.tanh(z)).astype(int)
    cols["computer"] = (rng.random(n) < 0.1 + 0.1 * (z > 0.5)).astype(int)
    cols["television"] = (rng.random(n) < 0.3).astype(int)
    cols["mobilephone"] = (rng.random(n) < 0.95).astype(int)
    cols["qmobilephone"] = np.clip(rng.poisson(2.5, n), 0, 10) * cols["mobilephone"]
    cols["dis"] = (rng.random(n) < 0.05).astype(int)
    cols["cielorazo"] = (rng.random(n) < 0.6 + 0.2 * np.tanh(z)).astype(int)
    age = np.clip(np.round(rng.gamma(2.0, 17.0, n)), 0, 97).astype(int)
    cols["age"] = age
    cols["agesq"] = age * age
    escolari = np.clip(np.round(np.where(age < 7, 0, np.minimum(age - 6, 8 + 3 * z))
                                + rng.normal(scale=1.5, size=n)), 0, 21).astype(int)
    cols["escolari"] = escolari
    cols["rez_esc"] = np.where((age >= 7) & (age <= 17), rng.integers(0, 3, n), 0)
    meaneduc = np.clip(8 + 3 * z + rng.normal(scale=1.0, size=n), 0, 21).round(6)

    # v18q / v18q1 (tablets) and v2a1 (rent): missing where not applicable
    n_tab_missing = _scaled(REFERENCE_MISSING["v18q1"], n)
    no_tab = np.zeros(n, dtype=bool)
    no_tab[rng.choice(n, n_tab_missing, replace=False)] = True
    cols["v18q"] = (~no_tab).astype(int)
    v18q1: list = [None if no_tab[i] else int(rng.integers(1, 4)) for i in range(n)]
    cols["v18q1"] = v18q1
    no_rent = np.zeros(n, dtype=bool)
    no_rent[rng.choice(n, _scaled(REFERENCE_MISSING["v2a1"], n), replace=False)] = True
    rent = np.round(np.exp(11.5 + 0.4 * z + rng.normal(scale=0.3, size=n)))
    cols["v2a1"] = [None if no_rent[i] else int(rent[i]) for i in range(n)]

    # one-hot groups; the better-off a row, the later the category index here
    plan = build_default_plan()
    inapplicable = {g: _scaled(k, n) for g, k in REFERENCE_INAPPLICABLE.items()}
    spare = rng.permutation(n)
    blank: dict[str, np.ndarray] = {}
    pos = 0
    for g, k in inapplicable.items():
        blank[g] = spare[pos:pos + k]
        pos += k
    n_urban = _scaled(REFERENCE_URBAN, n)
    urban = np.zeros(n, dtype=bool)
    urban[rng.choice(n, n_urban, replace=False)] = True
    for group in plan.merge_groups:
        m = len(group.members)
        if group.name == "area":
            choice = np.where(urban, 0, 1)
        elif group.name == "sex":
            choice = rng.integers(0, 2, n)
        else:
            idx = np.arange(m)[None, :]
            logits = 0.6 * z[:, None] * (idx - (m - 1) / 2) / max(1, m - 1)
            if group.name == "education_level":
                logits = 2.0 * z[:, None] * (idx - (m - 1) / 2) / max(1, m - 1)
            choice = _pick(rng, n, np.exp(logits))
        onehot = np.zeros((n, m), dtype=int)
        onehot[np.arange(n), choice] = 1
        if group.name in blank:
            onehot[blank[group.name]] = 0
        for j, member in enumerate(group.members):
            cols[member] = onehot[:, j]

    # dependency / edjefe / edjefa carry yes/no tokens
    dependency = np.round(cols["r4t1"] / np.maximum(cols["r4t2"], 1), 6)
    dep: list = [repr(float(v)) for v in dependency]
    for i in rng.choice(n, _scaled(REFERENCE_MISSING["dependency"], n), replace=False):
        dep[i] = "yes"
    dep = ["no" if t == "0.0" else t for t in dep]
    cols["dependency"] = dep
    head_edu = np.clip(np.round(8 + 3 * z + rng.normal(scale=2, size=n)), 1, 21).astype(int)
    is_male_head = rng.random(n) < 0.7
    edjefe = [str(v) if m else "no" for v, m in zip(head_edu, is_male_head)]
    edjefa = ["no" if m else str(v) for v, m in zip(head_edu, is_male_head)]
    picks = rng.permutation(n)
    k_e, k_a = _scaled(REFERENCE_MISSING["edjefe"], n), _scaled(REFERENCE_MISSING["edjefa"], n)
    for i in picks[:k_e]:
        edjefe[i] = "yes"
    for i in picks[k_e:k_e + k_a]:
        edjefa[i] = "yes"
    cols["edjefe"], cols["edjefa"] = edjefe, edjefa
    no_mean = set(rng.choice(n, _scaled(REFERENCE_MISSING["meaneduc"], n), replace=False).tolist())
    cols["meaneduc"] = [None if i in no_mean else repr(float(meaneduc[i])) for i in range(n)]

    cols["SQBescolari"] = escolari ** 2
    cols["SQBage"] = age ** 2
    cols["SQBhogar_total"] = size ** 2
    cols["SQBedjefe"] = [0 if t in ("no", "yes") else int(t) ** 2 for t in edjefe]
    cols["SQBhogar_nin"] = cols["hogar_nin"] ** 2
    cols["SQBovercrowding"] = np.round(cols["overcrowding"] ** 2, 6)
    cols["SQBdependency"] = np.round(dependency ** 2, 6)
    cols["SQBmeaned"] = [None if i in no_mean else repr(float(meaneduc[i] ** 2)) for i in range(n)]
    cols["Target"] = target

    out = {}
    for name in CANONICAL_SCHEMA.names:
        values = cols[name]
        out[name] = ["" if v is None else str(v) for v in (values.tolist() if isinstance(values, np.ndarray) else values)]
    return out


def write_csv(path: str | Path, n_rows: int = 2000, seed: int = 0) -> Path:
    data = generate(n_rows, seed)
    names = list(data)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(n_rows):
            w.writerow([data[c][i] for c in names])
    logger.info("wrote %d synthetic rows to %s", n_rows, path)
    return path


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="python -m povml.synthetic", description=__doc__.splitlines()[0])
    ap.add_argument("out", help="CSV path to write")
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    write_csv(args.out, args.rows, args.seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
