"""Tabular data model: schema, CSV ingestion, mixed-type distance, summaries."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, IngestionError, SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"


def _parse_number(text):
    """Return the finite float value of ``text``, or None if it is not one."""
    try:
        value = float(text)
    except (TypeError, ValueError):
        return None
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class Column:
    """One feature column: a name, a kind, and its domain.

    Numeric columns carry the observed ``[low, high]`` range used to
    normalise distances; categorical columns carry the set of admissible
    tokens (kept sorted for determinism).
    """

    name: str
    kind: str
    low: float = 0.0
    high: float = 0.0
    values: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"unknown column kind {self.kind!r} for {self.name!r}")
        if self.kind == NUMERIC and not self.low <= self.high:
            raise SchemaError(f"numeric column {self.name!r} has range low > high")
        if self.kind == CATEGORICAL:
            object.__setattr__(self, "values", tuple(sorted(self.values)))

    @property
    def is_numeric(self):
        return self.kind == NUMERIC


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature columns plus the target column name and protected set.

    The target is the label column and is not part of ``columns``; rows in a
    :class:`Dataset` hold feature cells only. An empty categorical value-set
    is only meaningful for zero-row datasets (no cell can conform to it).
    """

    columns: tuple[Column, ...]
    target: str
    protected: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "protected", frozenset(self.protected))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        if self.target in names:
            raise SchemaError(f"target {self.target!r} must not be a feature column")
        if self.target in self.protected:
            raise SchemaError("target column cannot be protected")
        unknown = self.protected - set(names)
        if unknown:
            raise SchemaError(f"protected features not in schema: {sorted(unknown)}")

    @property
    def names(self):
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"unknown feature {name!r}")

    def index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise SchemaError(f"unknown feature {name!r}")

    def validate_row(self, row) -> list:
        """Check one feature row against the schema, returning canonical cells."""
        if len(row) != len(self.columns):
            raise SchemaError(
                f"row has {len(row)} cells, schema has {len(self.columns)} columns"
            )
        cells = []
        for col, cell in zip(self.columns, row):
            if col.is_numeric:
                value = _parse_number(cell)
                if value is None:
                    raise SchemaError(f"cell {cell!r} is not numeric for {col.name!r}")
                cells.append(value)
            else:
                token = str(cell)
                if token not in col.values:
                    raise SchemaError(f"value {token!r} not allowed for {col.name!r}")
                cells.append(token)
        return cells

    def to_json(self) -> dict:
        cols = []
        for c in self.columns:
            if c.is_numeric:
                cols.append({"name": c.name, "kind": c.kind, "range": [c.low, c.high]})
            else:
                cols.append({"name": c.name, "kind": c.kind, "values": list(c.values)})
        return {"columns": cols, "target": self.target, "protected": sorted(self.protected)}

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureSchema":
        try:
            columns = []
            for c in obj["columns"]:
                if c["kind"] == NUMERIC:
                    low, high = c["range"]
                    columns.append(Column(c["name"], NUMERIC, low=float(low), high=float(high)))
                else:
                    columns.append(Column(c["name"], CATEGORICAL, values=tuple(c["values"])))
            return cls(tuple(columns), obj["target"], frozenset(obj.get("protected", ())))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed schema object: {exc}") from exc


@dataclass(frozen=True)
class Dataset:
    """An immutable rectangular table of feature rows plus class labels."""

    schema: FeatureSchema
    rows: tuple[tuple, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.rows) != len(self.labels):
            raise SchemaError("row and label counts differ")

    def __len__(self):
        return len(self.rows)

    @property
    def n_rows(self):
        return len(self.rows)

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels))

    def column_values(self, name: str) -> list:
        i = self.schema.index(name)
        return [row[i] for row in self.rows]


def infer_schema(header: list[str], cells: list[list[str]], target: str,
                 protected=()) -> FeatureSchema:
    """Infer a schema from raw string cells.

    A column is numeric iff every cell parses as a finite number; otherwise it
    is categorical over the observed tokens. With zero rows every column is
    categorical with an empty value-set.
    """
    if target not in header:
        raise SchemaError(f"target column {target!r} not in header")
    columns = []
    for j, name in enumerate(header):
        if name == target:
            continue
        raw = [row[j] for row in cells]
        parsed = [_parse_number(c) for c in raw]
        if raw and all(p is not None for p in parsed):
            columns.append(Column(name, NUMERIC, low=min(parsed), high=max(parsed)))
        else:
            columns.append(Column(name, CATEGORICAL, values=tuple(set(raw))))
    return FeatureSchema(tuple(columns), target, frozenset(protected))


def load_csv(path, schema: FeatureSchema | None = None, target: str | None = None,
             protected=()) -> Dataset:
    """Load a dataset from a comma-separated UTF-8 file with a header line.

    When ``schema`` is omitted the column kinds and domains are inferred from
    the data; ``target`` names the label column. Missing cells and ragged
    rows are rejected outright.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: file is empty, expected a header line")
        raw_rows = list(reader)

    if schema is not None:
        target = schema.target
    if target is None:
        raise ArgumentError("a target column name is required")
    if target not in header:
        raise SchemaError(f"target column {target!r} not in header {header}")

    for r, row in enumerate(raw_rows, start=1):
        if len(row) != len(header):
            raise IngestionError(
                f"row {r} has {len(row)} fields, header has {len(header)}", row=r
            )
        for c, cell in enumerate(row):
            if cell == "":
                raise IngestionError(
                    f"missing value at row {r}, column {header[c]!r}",
                    row=r, column=header[c],
                )

    target_idx = header.index(target)
    labels = [row[target_idx] for row in raw_rows]
    feature_cells = [[c for j, c in enumerate(row) if j != target_idx] for row in raw_rows]
    feature_header = [h for h in header if h != target]

    if schema is None:
        schema = infer_schema(header, raw_rows, target, protected)
    else:
        if feature_header != schema.names:
            raise SchemaError(
                f"header {feature_header} does not match schema columns {schema.names}"
            )

    rows = []
    for r, row in enumerate(feature_cells, start=1):
        try:
            rows.append(tuple(schema.validate_row(row)))
        except SchemaError as exc:
            raise IngestionError(f"row {r}: {exc}", row=r) from exc
    return Dataset(schema, tuple(rows), tuple(labels))


def format_number(value: float) -> str:
    """Render a numeric cell compactly; integral values drop the decimal part."""
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def save_csv(dataset: Dataset, path) -> None:
    """Write the dataset back to CSV; reloading yields an identical dataset."""
    schema = dataset.schema
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(schema.names + [schema.target])
        for row, label in zip(dataset.rows, dataset.labels):
            out = []
            for col, cell in zip(schema.columns, row):
                out.append(format_number(cell) if col.is_numeric else cell)
            writer.writerow(out + [label])


def _resolve_features(schema: FeatureSchema, features) -> list[str]:
    if features is None:
        names = schema.names
        if not names:
            raise ArgumentError("schema has no feature columns")
        return names
    names = list(features)
    if not names:
        raise ArgumentError("feature subset must not be empty")
    for name in names:
        schema.column(name)
    return names


def mixed_distance(a, b, schema: FeatureSchema, features=None) -> float:
    """Gower-style distance between two feature rows, in [0, 1].

    Mean over the compared features of: |a-b|/range clipped to [0, 1] for
    numeric columns (0/1 equality when the range is degenerate) and plain
    0/1 equality for categorical columns.
    """
    names = _resolve_features(schema, features)
    total = 0.0
    for name in names:
        col = schema.column(name)
        i = schema.index(name)
        total += _cell_distance(col, a[i], b[i])
    return total / len(names)


def _cell_distance(col: Column, x, y) -> float:
    if col.is_numeric:
        rng = col.high - col.low
        if rng > 0:
            return min(max(abs(float(x) - float(y)) / rng, 0.0), 1.0)
        return 0.0 if float(x) == float(y) else 1.0
    return 0.0 if x == y else 1.0


class RowEncoder:
    """Vectorised counterpart of :func:`mixed_distance` over row batches.

    Encodes rows once into per-feature arrays so distance blocks between
    batches can be accumulated feature by feature. The accumulation follows
    the same feature order and the same elementwise operations as the scalar
    function, so results are bit-identical to it.
    """

    def __init__(self, schema: FeatureSchema, features=None):
        self.schema = schema
        self.features = _resolve_features(schema, features)
        self._cols = [(schema.index(n), schema.column(n)) for n in self.features]
        self._codes: list[dict] = [dict() for _ in self._cols]
        for (_, col), codes in zip(self._cols, self._codes):
            if not col.is_numeric:
                for token in col.values:
                    codes[token] = len(codes)

    def encode(self, rows) -> list[np.ndarray]:
        out = []
        for (i, col), codes in zip(self._cols, self._codes):
            if col.is_numeric:
                out.append(np.array([float(r[i]) for r in rows], dtype=np.float64))
            else:
                column = []
                for r in rows:
                    token = r[i]
                    if token not in codes:
                        codes[token] = len(codes)
                    column.append(codes[token])
                out.append(np.array(column, dtype=np.int64))
        return out

    def distance_block(self, enc_a, enc_b) -> np.ndarray:
        """Pairwise distances: result[i, j] = distance(a_i, b_j)."""
        n_a = len(enc_a[0]) if enc_a else 0
        n_b = len(enc_b[0]) if enc_b else 0
        total = np.zeros((n_a, n_b), dtype=np.float64)
        for (_, col), va, vb in zip(self._cols, enc_a, enc_b):
            if col.is_numeric:
                rng = col.high - col.low
                if rng > 0:
                    d = np.abs(va[:, None] - vb[None, :]) / rng
                    np.clip(d, 0.0, 1.0, out=d)
                else:
                    d = (va[:, None] != vb[None, :]).astype(np.float64)
            else:
                d = (va[:, None] != vb[None, :]).astype(np.float64)
            total += d
        total /= len(self._cols)
        return total


def distance_matrix(schema: FeatureSchema, rows_a, rows_b, features=None) -> np.ndarray:
    """Pairwise mixed distances between two row collections."""
    enc = RowEncoder(schema, features)
    return enc.distance_block(enc.encode(rows_a), enc.encode(rows_b))


def nearest_rank(sorted_values, p: float):
    """Nearest-rank quantile: the value at rank ceil(p*n) of the sorted list."""
    n = len(sorted_values)
    if n == 0:
        raise ArgumentError("quantile of empty list")
    rank = max(1, math.ceil(p * n))
    return sorted_values[min(rank, n) - 1]


def summarize(dataset: Dataset) -> dict:
    """Row count, per-column statistics, and the overall class distribution."""
    columns = {}
    for col in dataset.schema.columns:
        values = dataset.column_values(col.name)
        if col.is_numeric:
            if values:
                ordered = sorted(values)
                stats = {
                    "kind": NUMERIC,
                    "mean": sum(values) / len(values),
                    "min": ordered[0],
                    "max": ordered[-1],
                    "q1": nearest_rank(ordered, 0.25),
                    "median": nearest_rank(ordered, 0.5),
                    "q3": nearest_rank(ordered, 0.75),
                }
            else:
                stats = {"kind": NUMERIC, "mean": None, "min": None, "max": None,
                         "q1": None, "median": None, "q3": None}
        else:
            counts = {}
            for v in values:
                counts[v] = counts.get(v, 0) + 1
            stats = {"kind": CATEGORICAL, "counts": {k: counts[k] for k in sorted(counts)}}
        columns[col.name] = stats

    distribution = {}
    if dataset.labels:
        for label in dataset.labels:
            distribution[label] = distribution.get(label, 0) + 1
        total = len(dataset.labels)
        distribution = {k: distribution[k] / total for k in sorted(distribution)}
    return {"rows": len(dataset), "columns": columns, "class_distribution": distribution}


def load_schema_file(path) -> FeatureSchema:
    with open(path, encoding="utf-8") as handle:
        return FeatureSchema.from_json(json.load(handle))


def save_schema_file(schema: FeatureSchema, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(schema.to_json(), handle, indent=2, sort_keys=True)
        handle.write("\n")
