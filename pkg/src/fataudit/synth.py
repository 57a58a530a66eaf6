"""Deterministic synthetic census-style data for demos and qualitative audits.

Rows are drawn around a few hundred "profiles" (shared categorical combos
with per-profile numeric centres), so every row has close neighbours and
density structure is controlled. Labels follow a crisp income rule
(high capital gain, or high education past age 32) with one deliberately
ambiguous block inside the smallest ethnic group, which gives audits
realistic representation, fairness and robustness findings to surface.
"""

from __future__ import annotations

import argparse

import numpy as np

from .tabular import CATEGORICAL, NUMERIC, Column, Dataset, FeatureSchema, save_csv

POSITIVE = ">50K"
NEGATIVE = "<=50K"

SPARSE_ROW_INDEX = 4771
FNLWGT_OUTLIER = 1226583.0

RACES = ["White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"]
RACE_WEIGHTS = [0.855, 0.094, 0.031, 0.010, 0.010]

# per-race education-num profile centres: (mean, sd, low, high). The small
# groups get hard caps so their label rates stay stable at any sample size.
EDU_PARAMS = {
    "White": (11.0, 2.6, 2, 15),
    "Black": (9.3, 2.2, 2, 15),
    "Asian-Pac-Islander": (12.8, 1.2, 2, 15),
    "Amer-Indian-Eskimo": (8.6, 1.5, 5, 10),
    "Other": (9.5, 1.5, 6, 11),
}

WORKCLASSES = (["Private", "Self-emp-not-inc", "Local-gov", "State-gov", "Federal-gov"],
               [0.70, 0.12, 0.08, 0.06, 0.04])
MARITAL = (["Married-civ-spouse", "Never-married", "Divorced", "Widowed"],
           [0.47, 0.33, 0.14, 0.06])
OCCUPATIONS = (["Craft-repair", "Exec-managerial", "Prof-specialty", "Sales",
                "Adm-clerical", "Other-service", "Machine-op-inspct", "Transport-moving"],
               [0.15, 0.14, 0.14, 0.13, 0.13, 0.12, 0.10, 0.09])
RELATIONSHIPS = (["Husband", "Not-in-family", "Own-child", "Unmarried", "Wife"],
                 [0.40, 0.26, 0.15, 0.11, 0.08])
COUNTRIES = (["United-States", "Mexico", "Philippines", "Germany", "India"],
             [0.91, 0.03, 0.02, 0.02, 0.02])
SEXES = (["Male", "Female"], [0.67, 0.33])

EDUCATION_TOKENS = {
    1: "Preschool", 2: "1st-4th", 3: "5th-6th", 4: "7th-8th", 5: "9th", 6: "10th",
    7: "11th", 8: "12th", 9: "HS-grad", 10: "Some-college", 11: "Assoc-voc",
    12: "Assoc-acdm", 13: "Bachelors", 14: "Masters", 15: "Prof-school", 16: "Doctorate",
}

CAPITAL_GAIN_POOL = [2174.0, 3103.0, 4386.0, 5178.0, 6097.0, 6849.0, 7688.0,
                     8614.0, 9562.0, 10520.0, 11678.0, 13550.0, 15024.0,
                     17300.0, 20000.0, 22500.0, 25000.0]
CAPITAL_LOSS_POOL = [625.0, 1092.0, 1504.0, 1887.0, 2258.0, 2800.0]

FEATURES = ["age", "workclass", "fnlwgt", "education", "education-num",
            "marital-status", "occupation", "relationship", "race", "sex",
            "capital-gain", "capital-loss", "hours-per-week", "native-country"]

# The income rule the data follows everywhere outside the ambiguous block.
GAIN_CUTOFF = 7073.0
EDU_CUTOFF = 13
AGE_CUTOFF = 33

# Ambiguous block: a feature-identical template inside the "Other" group whose
# labels are intentionally mixed (majority positive), so no model can separate
# them and audits see degraded negative-class performance for that group.
TRAP_SHARE = 0.45
TRAP_POSITIVE_SHARE = 0.55
TRAP_TEMPLATE = {
    "workclass": "Private", "marital-status": "Married-civ-spouse",
    "occupation": "Prof-specialty", "relationship": "Husband",
    "native-country": "United-States", "sex": "Male",
    "age": 45.0, "education-num": 14.0, "fnlwgt": 195000.0,
    "hours-per-week": 50.0, "capital-gain": 0.0, "capital-loss": 0.0,
}


def _snap(value, step, low, high):
    return float(min(max(round(value / step) * step, low), high))


def _make_profiles(rng, race, count):
    mu, sd, lo, hi = EDU_PARAMS[race]
    pool_weights = np.array([1.0 / (i + 2) for i in range(len(CAPITAL_GAIN_POOL))])
    pool_weights /= pool_weights.sum()
    profiles = []
    for _ in range(count):
        # -1 marks a no-gain profile; otherwise the pool index members jitter around
        gain_centre = -1
        if rng.random() < 0.08:
            gain_centre = int(rng.choice(len(CAPITAL_GAIN_POOL), p=pool_weights))
        loss = 0.0
        if rng.random() < 0.05:
            loss = CAPITAL_LOSS_POOL[rng.integers(0, len(CAPITAL_LOSS_POOL))]
        profiles.append({
            "workclass": WORKCLASSES[0][rng.choice(len(WORKCLASSES[0]), p=WORKCLASSES[1])],
            "marital-status": MARITAL[0][rng.choice(len(MARITAL[0]), p=MARITAL[1])],
            "occupation": OCCUPATIONS[0][rng.choice(len(OCCUPATIONS[0]), p=OCCUPATIONS[1])],
            "relationship": RELATIONSHIPS[0][rng.choice(len(RELATIONSHIPS[0]), p=RELATIONSHIPS[1])],
            "native-country": COUNTRIES[0][rng.choice(len(COUNTRIES[0]), p=COUNTRIES[1])],
            "sex": SEXES[0][rng.choice(len(SEXES[0]), p=SEXES[1])],
            "age": _snap(rng.normal(39, 13), 3, 21, 69),
            "education-num": float(int(min(max(round(rng.normal(mu, sd)), lo), hi))),
            "fnlwgt": _snap(rng.normal(185000, 70000), 5000, 25000, 395000),
            "hours-per-week": _snap(rng.normal(42, 10), 5, 15, 75),
            "capital-gain-centre": gain_centre,
            "capital-loss": loss,
        })
    return profiles


def _member_gain(rng, centre):
    if centre < 0:
        return 0.0
    i = min(max(centre + int(rng.integers(-2, 3)), 0), len(CAPITAL_GAIN_POOL) - 1)
    return CAPITAL_GAIN_POOL[i]


def _jitter_pool(rng, pool, value):
    if value == 0.0:
        return 0.0
    i = pool.index(value)
    if rng.random() < 0.3:
        i = min(max(i + int(rng.integers(-1, 2)), 0), len(pool) - 1)
    return pool[i]


def _row_from_profile(rng, race, profile):
    age = _snap(profile["age"] + rng.choice([-3.0, 0.0, 3.0], p=[0.15, 0.7, 0.15]), 3, 18, 72)
    edu = profile["education-num"]
    fnlwgt = _snap(profile["fnlwgt"] + 5000 * rng.integers(-2, 3), 5000, 20000, 400000)
    hours = _snap(profile["hours-per-week"]
                  + rng.choice([-5.0, 0.0, 5.0], p=[0.15, 0.7, 0.15]), 5, 10, 80)
    gain = _member_gain(rng, profile["capital-gain-centre"])
    loss = _jitter_pool(rng, CAPITAL_LOSS_POOL, profile["capital-loss"])
    return {
        "age": age, "workclass": profile["workclass"], "fnlwgt": fnlwgt,
        "education": EDUCATION_TOKENS[int(edu)], "education-num": edu,
        "marital-status": profile["marital-status"], "occupation": profile["occupation"],
        "relationship": profile["relationship"], "race": race, "sex": profile["sex"],
        "capital-gain": gain, "capital-loss": loss, "hours-per-week": hours,
        "native-country": profile["native-country"],
    }


def income_rule(row: dict) -> str:
    """The deterministic label rule the synthetic population follows."""
    if row["capital-gain"] >= GAIN_CUTOFF:
        return POSITIVE
    if row["education-num"] >= EDU_CUTOFF and row["age"] >= AGE_CUTOFF:
        return POSITIVE
    return NEGATIVE


def make_census(rows: int = 12000, seed: int = 7) -> Dataset:
    """Generate the synthetic census dataset with protected race/sex columns."""
    rng = np.random.default_rng(seed)
    profiles = {race: _make_profiles(rng, race, max(3, round(rows * w / 60)))
                for race, w in zip(RACES, RACE_WEIGHTS)}

    records = []
    labels = []
    trap_indices = []
    race_idx = rng.choice(len(RACES), size=rows, p=RACE_WEIGHTS)
    for i in range(rows):
        race = RACES[race_idx[i]]
        if race == "Other" and rng.random() < TRAP_SHARE:
            record = dict(TRAP_TEMPLATE)
            record["education"] = EDUCATION_TOKENS[int(record["education-num"])]
            record["race"] = race
            trap_indices.append(i)
            records.append(record)
            labels.append(NEGATIVE)  # overwritten below to an exact mix
            continue
        pool = profiles[race]
        record = _row_from_profile(rng, race, pool[rng.integers(0, len(pool))])
        records.append(record)
        labels.append(income_rule(record))

    n_pos = round(TRAP_POSITIVE_SHARE * len(trap_indices))
    for j, i in enumerate(trap_indices):
        labels[i] = POSITIVE if j < n_pos else NEGATIVE

    if rows > SPARSE_ROW_INDEX:
        records[SPARSE_ROW_INDEX] = dict(records[SPARSE_ROW_INDEX])
        records[SPARSE_ROW_INDEX]["fnlwgt"] = FNLWGT_OUTLIER

    columns = []
    for name in FEATURES:
        values = [r[name] for r in records]
        if isinstance(values[0], float):
            columns.append(Column(name, NUMERIC, low=min(values), high=max(values)))
        else:
            columns.append(Column(name, CATEGORICAL, values=tuple(set(values))))
    schema = FeatureSchema(tuple(columns), target="income",
                           protected=frozenset({"race", "sex"}))
    dataset_rows = tuple(tuple(r[name] for name in FEATURES) for r in records)
    return Dataset(schema, dataset_rows, tuple(labels))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="write the synthetic census CSV")
    parser.add_argument("path")
    parser.add_argument("--rows", type=int, default=12000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    save_csv(make_census(args.rows, args.seed), args.path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
