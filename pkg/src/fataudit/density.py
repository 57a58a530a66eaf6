"""Neighbour-based density scoring of points against a frozen training sample.

The raw score of a point is its mixed distance to the n-th nearest
reference row; scores are min-max normalised over the reference sample so
that 0 means densest and 1 sparsest. High scores mark points the training
data says little about.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .models import predict_labels
from .tabular import Dataset, FeatureSchema, RowEncoder

_CHUNK = 512


@dataclass
class DensityEstimator:
    schema: FeatureSchema
    features: tuple[str, ...]
    n: int
    reference_rows: tuple
    raw_scores: np.ndarray
    min_raw: float
    max_raw: float
    _encoder: RowEncoder = field(repr=False, default=None)
    _encoded: list = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "reference_size": len(self.reference_rows),
            "features": list(self.features),
            "min_raw": self.min_raw,
            "max_raw": self.max_raw,
        }


def fit_density(dataset: Dataset, n: int = 7, features=None) -> DensityEstimator:
    """Freeze the dataset rows as the reference sample and score each of them.

    The raw score of a reference row is the distance to its n-th nearest
    *other* reference row; the min/max of those raw scores become the
    normalisers applied to every later query.
    """
    if n < 1:
        raise ArgumentError("n must be >= 1")
    if len(dataset) <= n:
        raise ArgumentError(f"need more than n={n} reference rows, got {len(dataset)}")
    encoder = RowEncoder(dataset.schema, features)
    encoded = encoder.encode(dataset.rows)
    size = len(dataset)

    raw = np.empty(size)
    for start in range(0, size, _CHUNK):
        stop = min(start + _CHUNK, size)
        chunk = [col[start:stop] for col in encoded]
        block = encoder.distance_block(chunk, encoded)
        block[np.arange(stop - start), np.arange(start, stop)] = np.inf
        raw[start:stop] = np.partition(block, n - 1, axis=1)[:, n - 1]

    return DensityEstimator(
        schema=dataset.schema,
        features=tuple(encoder.features),
        n=n,
        reference_rows=dataset.rows,
        raw_scores=raw,
        min_raw=float(raw.min()),
        max_raw=float(raw.max()),
        _encoder=encoder,
        _encoded=encoded,
    )


def _normalize(estimator: DensityEstimator, raw: np.ndarray) -> np.ndarray:
    span = estimator.max_raw - estimator.min_raw
    if span <= 0:
        return np.zeros_like(raw)
    return np.clip((raw - estimator.min_raw) / span, 0.0, 1.0)


def score_rows(estimator: DensityEstimator, rows) -> np.ndarray:
    """Density scores in [0, 1] for a batch of query rows.

    A query's raw score is the distance to its n-th nearest reference row;
    coincident reference rows count, so querying a reference location with
    small n gives a raw score of 0.
    """
    if len(rows) == 0:
        return np.zeros(0)
    raw = np.empty(len(rows))
    for start in range(0, len(rows), _CHUNK):
        stop = min(start + _CHUNK, len(rows))
        chunk = estimator._encoder.encode(rows[start:stop])
        block = estimator._encoder.distance_block(chunk, estimator._encoded)
        raw[start:stop] = np.partition(block, estimator.n - 1, axis=1)[:, estimator.n - 1]
    return _normalize(estimator, raw)


def density_score(estimator: DensityEstimator, point) -> float:
    """Normalised sparseness of one point with respect to the reference sample."""
    return float(score_rows(estimator, [point])[0])


def prediction_confidence(estimator: DensityEstimator, model, point,
                          threshold: float = 0.5) -> dict:
    """Prediction plus a density-based robustness proxy.

    The prediction counts as robust when the point sits in a region the
    training data covers, i.e. its density score stays at or below the
    threshold.
    """
    prediction = predict_labels(model, [point])[0]
    score = density_score(estimator, point)
    return {
        "prediction": prediction,
        "density_score": score,
        "robust": score <= threshold,
        "threshold": threshold,
    }


def flag_sparse_rows(estimator: DensityEstimator, rows, threshold: float = 0.5) -> list[dict]:
    """Indices and scores of query rows whose density score exceeds the threshold."""
    scores = score_rows(estimator, rows)
    return [{"row": int(i), "score": float(s)}
            for i, s in enumerate(scores) if s > threshold]
