"""Black-box model contract, built-in trainable classifiers, remote client.

Every model exposes ``fit(dataset)``, ``predict(rows)`` and (optionally)
``predict_proba(rows)``; anything with those methods can be audited, the
built-ins here just make the package self-contained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import requests

from .cart import DecisionTree
from .errors import (ArgumentError, RemoteModelError, StateError,
                     TrainingError, UnsupportedError)
from .tabular import Dataset, FeatureSchema, RowEncoder

_PROBA_TOL = 1e-9


@dataclass(frozen=True)
class PredictionBatch:
    """Predicted class tokens plus optional per-class distributions."""

    predictions: tuple
    probabilities: tuple | None = None
    classes: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "predictions", tuple(self.predictions))
        if self.probabilities is None:
            return
        if self.classes is None:
            raise ArgumentError("probabilities need an ordered class list")
        probs = tuple(tuple(float(p) for p in row) for row in self.probabilities)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "classes", tuple(self.classes))
        for pred, row in zip(self.predictions, probs):
            if len(row) != len(self.classes):
                raise ArgumentError("probability row length != class count")
            if abs(sum(row) - 1.0) > _PROBA_TOL:
                raise ArgumentError("probability row does not sum to 1")
            if self.classes[row.index(max(row))] != pred:
                raise ArgumentError("probability argmax disagrees with prediction")

    def __len__(self):
        return len(self.predictions)


def predict_labels(model, rows) -> list:
    """Predicted class tokens from any fit/predict-style model."""
    result = model.predict(rows)
    if isinstance(result, PredictionBatch):
        return list(result.predictions)
    return list(result)


def try_predict_proba(model, rows):
    """(classes, matrix) from predict_proba, or None when unsupported."""
    proba = getattr(model, "predict_proba", None)
    if proba is None:
        return None
    try:
        result = proba(rows)
    except UnsupportedError:
        return None
    if isinstance(result, PredictionBatch):
        if result.probabilities is None:
            return None
        return list(result.classes), [list(r) for r in result.probabilities]
    return None


class _BuiltinModel:
    """Shared fit bookkeeping for the built-in classifiers."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.fitted = False
        self.classes: tuple[str, ...] = ()
        self.schema: FeatureSchema | None = None

    def fit(self, dataset: Dataset):
        if len(dataset) < 1:
            raise TrainingError("cannot fit on an empty dataset")
        classes = dataset.classes
        if len(classes) < 2:
            raise TrainingError("training data has a single class")
        self.classes = tuple(classes)
        self.schema = dataset.schema
        self._fit(dataset)
        self.fitted = True
        return self

    def _require_fitted(self):
        if not self.fitted:
            raise StateError(f"{type(self).__name__} is not fitted")

    def _batch(self, proba_matrix) -> PredictionBatch:
        proba_matrix = np.asarray(proba_matrix, dtype=np.float64)
        indices = np.argmax(proba_matrix, axis=1)
        predictions = tuple(self.classes[i] for i in indices)
        return PredictionBatch(predictions, tuple(map(tuple, proba_matrix)), self.classes)

    def predict(self, rows) -> PredictionBatch:
        self._require_fitted()
        if len(rows) == 0:
            return PredictionBatch(())
        batch = self._batch(self._proba(rows))
        return PredictionBatch(batch.predictions)

    def predict_proba(self, rows) -> PredictionBatch:
        self._require_fitted()
        if len(rows) == 0:
            return PredictionBatch((), (), self.classes)
        return self._batch(self._proba(rows))


class KNNModel(_BuiltinModel):
    """k-nearest-neighbour voting under the mixed-type distance."""

    def __init__(self, k: int = 3, seed: int = 0):
        super().__init__(seed)
        if k < 1:
            raise ArgumentError("k must be >= 1")
        self.k = k

    def _fit(self, dataset):
        if self.k > len(dataset):
            raise TrainingError(f"k={self.k} exceeds {len(dataset)} training rows")
        self._encoder = RowEncoder(dataset.schema)
        self._train = self._encoder.encode(dataset.rows)
        self._train_y = np.array([self.classes.index(l) for l in dataset.labels])

    def _proba(self, rows):
        distances = self._encoder.distance_block(self._encoder.encode(rows), self._train)
        out = np.zeros((len(rows), len(self.classes)))
        for i, row in enumerate(distances):
            # stable argsort: distance ties fall back on training-row order
            neighbours = np.argsort(row, kind="stable")[: self.k]
            votes = np.bincount(self._train_y[neighbours], minlength=len(self.classes))
            out[i] = votes / self.k
        return out


class LogisticModel(_BuiltinModel):
    """Multinomial logistic regression via full-batch gradient descent.

    Numeric features are scaled to [0, 1] by their schema range and
    categorical features one-hot encoded, which keeps the fixed step size
    stable regardless of feature magnitudes.
    """

    def __init__(self, learning_rate: float = 0.1, epochs: int = 500, seed: int = 0):
        super().__init__(seed)
        self.learning_rate = learning_rate
        self.epochs = epochs

    def _design(self, rows):
        cols = [np.ones(len(rows))]
        for j, col in enumerate(self.schema.columns):
            if col.is_numeric:
                rng = col.high - col.low
                raw = np.array([float(r[j]) for r in rows])
                cols.append((raw - col.low) / rng if rng > 0 else np.zeros(len(rows)))
            else:
                for value in col.values:
                    cols.append(np.array([1.0 if r[j] == value else 0.0 for r in rows]))
        return np.column_stack(cols)

    def _fit(self, dataset):
        X = self._design(dataset.rows)
        y = np.array([self.classes.index(l) for l in dataset.labels])
        Y = np.zeros((len(y), len(self.classes)))
        Y[np.arange(len(y)), y] = 1.0
        W = np.zeros((X.shape[1], len(self.classes)))
        for _ in range(self.epochs):
            P = self._softmax(X @ W)
            W -= self.learning_rate * (X.T @ (P - Y)) / len(y)
        self._weights = W

    @staticmethod
    def _softmax(logits):
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def _proba(self, rows):
        return self._softmax(self._design(rows) @ self._weights)


class TreeModel(_BuiltinModel):
    """CART-style decision tree on Gini impurity with native categorical splits."""

    def __init__(self, max_depth: int = 4, min_samples_leaf: int = 1, seed: int = 0):
        super().__init__(seed)
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def _encode(self, rows):
        out = np.empty((len(rows), len(self.schema.columns)))
        for j, col in enumerate(self.schema.columns):
            if col.is_numeric:
                out[:, j] = [float(r[j]) for r in rows]
            else:
                codes = {v: i for i, v in enumerate(col.values)}
                out[:, j] = [codes.get(r[j], -1) for r in rows]
        return out

    def _fit(self, dataset):
        X = self._encode(dataset.rows)
        y = np.array([self.classes.index(l) for l in dataset.labels])
        is_cat = [not c.is_numeric for c in self.schema.columns]
        self.tree = DecisionTree(self.max_depth, self.min_samples_leaf)
        self.tree.fit(X, is_cat, y, len(self.classes))

    def _proba(self, rows):
        return self.tree.predict_proba(self._encode(rows))


class RemoteModel:
    """Client for a classifier served over HTTP.

    The endpoint receives ``POST <url>/predict`` with ``{"rows": [[...]]}``
    and answers ``{"predictions": [...]}`` plus an optional
    ``"probabilities"`` grid. Probabilities are only interpretable when the
    caller supplies the server's class order up front.
    """

    def __init__(self, url: str, class_list=None, timeout: float = 10.0):
        self.url = url.rstrip("/")
        self.classes = tuple(class_list) if class_list else None
        self.timeout = timeout
        self.fitted = True

    def fit(self, dataset):
        raise UnsupportedError("remote models are fitted by their owner")

    def _call(self, rows) -> dict:
        try:
            response = requests.post(
                f"{self.url}/predict",
                json={"rows": [list(r) for r in rows]},
                timeout=self.timeout,
            )
            response.raise_for_status()
            payload = response.json()
        except requests.RequestException as exc:
            raise RemoteModelError(f"remote predict failed: {exc}") from exc
        except ValueError as exc:
            raise RemoteModelError(f"remote response is not JSON: {exc}") from exc
        if "predictions" not in payload:
            raise RemoteModelError("remote response lacks 'predictions'")
        if len(payload["predictions"]) != len(rows):
            raise RemoteModelError("remote response length mismatch")
        return payload

    def predict(self, rows) -> PredictionBatch:
        if len(rows) == 0:
            return PredictionBatch(())
        return PredictionBatch(tuple(self._call(rows)["predictions"]))

    def predict_proba(self, rows) -> PredictionBatch:
        if self.classes is None:
            raise UnsupportedError("remote probabilities need a known class order")
        if len(rows) == 0:
            return PredictionBatch((), (), self.classes)
        payload = self._call(rows)
        if payload.get("probabilities") is None:
            raise UnsupportedError("remote model returned no probabilities")
        return PredictionBatch(tuple(payload["predictions"]),
                               tuple(map(tuple, payload["probabilities"])),
                               self.classes)


_BUILTINS = {"knn": KNNModel, "logistic": LogisticModel, "tree": TreeModel}


def make_model(spec: str, seed: int = 0):
    """Build a model from a spec string like ``tree:max_depth=8`` or ``knn:k=5``."""
    kind, _, params = spec.partition(":")
    kind = kind.strip()
    if kind not in _BUILTINS:
        raise ArgumentError(
            f"unknown model kind {kind!r}; expected one of {sorted(_BUILTINS)}"
        )
    kwargs = {"seed": seed}
    if params:
        for item in params.split(","):
            key, _, value = item.partition("=")
            if not _ or not key.strip():
                raise ArgumentError(f"malformed model parameter {item!r}")
            try:
                number = float(value)
            except ValueError:
                raise ArgumentError(f"model parameter {key!r} must be numeric")
            kwargs[key.strip()] = int(number) if number.is_integer() else number
    try:
        return _BUILTINS[kind](**kwargs)
    except TypeError as exc:
        raise ArgumentError(f"bad parameters for {kind!r}: {exc}") from exc
