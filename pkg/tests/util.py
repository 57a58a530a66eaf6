"""Shared test helpers: tiny dataset builders and duck-typed model doubles."""

from __future__ import annotations

import numpy as np

from fataudit.tabular import CATEGORICAL, NUMERIC, Column, Dataset, FeatureSchema


def numeric_dataset(points, labels, names=None, target="y", protected=()):
    names = names or [f"x{i + 1}" for i in range(len(points[0]))]
    cols = tuple(
        Column(n, NUMERIC,
               low=min(p[i] for p in points), high=max(p[i] for p in points))
        for i, n in enumerate(names)
    )
    schema = FeatureSchema(cols, target, frozenset(protected))
    return Dataset(schema, tuple(tuple(float(v) for v in p) for p in points),
                   tuple(str(l) for l in labels))


def mixed_dataset(rows, labels, kinds, names=None, target="y", protected=()):
    """kinds: string of 'n'/'c' per column."""
    names = names or [f"f{i + 1}" for i in range(len(kinds))]
    cols = []
    for i, (name, kind) in enumerate(zip(names, kinds)):
        values = [r[i] for r in rows]
        if kind == "n":
            cols.append(Column(name, NUMERIC, low=min(values), high=max(values)))
        else:
            cols.append(Column(name, CATEGORICAL, values=tuple(set(values))))
    schema = FeatureSchema(tuple(cols), target, frozenset(protected))
    return Dataset(schema, tuple(tuple(r) for r in rows), tuple(str(l) for l in labels))


class FunctionModel:
    """Black box defined by a plain row -> label function (always fitted)."""

    def __init__(self, fn, classes):
        self.fn = fn
        self.classes = tuple(classes)
        self.fitted = True

    def fit(self, dataset):
        return self

    def predict(self, rows):
        return [self.fn(row) for row in rows]


class ConstantModel(FunctionModel):
    def __init__(self, label, classes=None):
        super().__init__(lambda row: label, classes or (label,))


def random_mixed_dataset(rng, n_rows, n_numeric, n_categorical, n_classes=2):
    """Random mixed-type dataset for oracle-equality checks."""
    rows = []
    tokens = ["ant", "bee", "cat", "dog", "elk"]
    for _ in range(n_rows):
        row = [float(np.round(rng.uniform(-5, 5), 3)) for _ in range(n_numeric)]
        row += [tokens[rng.integers(0, len(tokens))] for _ in range(n_categorical)]
        rows.append(tuple(row))
    labels = [f"c{rng.integers(0, n_classes)}" for _ in range(n_rows)]
    kinds = "n" * n_numeric + "c" * n_categorical
    return mixed_dataset(rows, labels, kinds)


def two_moons_dataset(n_per_moon, noise, seed):
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, np.pi, n_per_moon)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1 - np.cos(t), 0.5 - np.sin(t)])
    points = np.vstack([upper, lower]) + rng.normal(0, noise, (2 * n_per_moon, 2))
    labels = ["blue"] * n_per_moon + ["red"] * n_per_moon
    return numeric_dataset(points.tolist(), labels)
