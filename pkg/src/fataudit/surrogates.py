"""Modular surrogate explanations: build-your-own LIME-style pipelines.

The pipeline is a chain of small interchangeable steps: optional
interpretable binary representation, data augmentation around an instance
(or the whole population), labelling by the black box, optional proximity
weighting and feature selection, a ridge or tree surrogate fit, and
explanation extraction. ``explain`` wires the steps together; each step is
also public so custom pipelines can be assembled by hand, and a manual
composition with the same seed reproduces ``explain`` bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cart import DecisionTree
from .errors import ArgumentError, FitError
from .models import predict_labels, try_predict_proba
from .tabular import Dataset, FeatureSchema, distance_matrix, format_number, nearest_rank

SURROGATE_KINDS = ("ridge", "tree")
SAMPLERS = ("normal", "mixup")
LOCALITIES = ("local", "global")


@dataclass(frozen=True)
class SurrogateConfig:
    """Knobs for every pipeline step.

    The defaults reproduce the classic local linear explainer: interpretable
    representation on, 1000 normal samples at the data's own spread, kernel
    width 0.25, no feature selection, ridge penalty 1.0.
    """

    kind: str = "ridge"
    ridge_lambda: float = 1.0
    max_depth: int = 3
    sampler: str = "normal"
    n_samples: int = 1000
    scale: float = 1.0
    alpha: float = 1.0
    kernel_width: float | None = 0.25
    discretize: bool = True
    top_m: int | None = None
    seed: int = 0
    locality: str = "local"

    def __post_init__(self):
        if self.kind not in SURROGATE_KINDS:
            raise ArgumentError(f"unknown surrogate kind {self.kind!r}")
        if self.sampler not in SAMPLERS:
            raise ArgumentError(f"unknown sampler {self.sampler!r}")
        if self.locality not in LOCALITIES:
            raise ArgumentError(f"unknown locality {self.locality!r}")
        if self.n_samples < 2:
            raise ArgumentError("n_samples must be >= 2")
        if self.alpha <= 0:
            raise ArgumentError("mixup alpha must be > 0")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ArgumentError("kernel width must be > 0 or None")
        if self.ridge_lambda < 0:
            raise ArgumentError("ridge penalty must be >= 0")
        if self.max_depth < 1:
            raise ArgumentError("max_depth must be >= 1")
        if self.top_m is not None and self.top_m < 1:
            raise ArgumentError("top_m must be >= 1")


def _column_std(values) -> float:
    return float(np.std(np.asarray(values, dtype=np.float64))) if len(values) else 0.0


def sample_normal(dataset: Dataset, instance, n: int, scale: float, seed: int) -> list[tuple]:
    """Draw n rows around one instance.

    Numeric cells come from a normal law centred on the instance with spread
    ``scale`` times the dataset's column standard deviation, clipped to the
    schema range; categorical cells are resampled from the observed
    empirical frequencies.
    """
    if n < 2:
        raise ArgumentError("n must be >= 2")
    schema = dataset.schema
    instance = schema.validate_row(instance)
    rng = np.random.default_rng(seed)
    columns = []
    for j, col in enumerate(schema.columns):
        values = dataset.column_values(col.name)
        if col.is_numeric:
            spread = scale * _column_std(values)
            drawn = rng.normal(float(instance[j]), spread, n)
            columns.append(np.clip(drawn, col.low, col.high))
        else:
            tokens = sorted(set(values))
            if not tokens:
                raise ArgumentError(f"no observed values for {col.name!r}")
            freq = np.array([values.count(t) for t in tokens], dtype=np.float64)
            picks = rng.choice(len(tokens), size=n, p=freq / freq.sum())
            columns.append([tokens[i] for i in picks])
    return [tuple(col[i] for col in columns) for i in range(n)]


def sample_global(dataset: Dataset, n: int, scale: float, seed: int) -> list[tuple]:
    """Population-wide sampling: jitter numerics around uniformly drawn rows.

    This is the global counterpart of :func:`sample_normal`; the only
    difference is the region the samples cover.
    """
    if n < 2:
        raise ArgumentError("n must be >= 2")
    if len(dataset) == 0:
        raise ArgumentError("cannot sample from an empty dataset")
    schema = dataset.schema
    rng = np.random.default_rng(seed)
    centres = rng.integers(0, len(dataset), size=n)
    columns = []
    for j, col in enumerate(schema.columns):
        values = dataset.column_values(col.name)
        base = [dataset.rows[i][j] for i in centres]
        if col.is_numeric:
            spread = scale * _column_std(values)
            drawn = rng.normal(np.asarray(base, dtype=np.float64), spread)
            columns.append(np.clip(drawn, col.low, col.high))
        else:
            columns.append(base)
    return [tuple(col[i] for col in columns) for i in range(n)]


def sample_mixup(dataset: Dataset, instance, instance_label, n: int, alpha: float,
                 seed: int):
    """Interpolate the instance against partner rows of stratified classes.

    Returns ``(rows, soft_labels, classes)``. Partners are drawn half from
    the instance's class and half from the remaining classes, so both always
    appear. Each pair mixes with its own Beta(alpha, alpha) weight: numeric
    cells as a convex combination, categorical cells by a weighted coin, and
    the soft label as the same mixture of the two one-hot labels.
    """
    if n < 2 or n % 2:
        raise ArgumentError("n must be even and >= 2")
    classes = sorted(set(dataset.labels))
    if len(classes) < 2:
        raise ArgumentError("mixup needs at least two classes in the dataset")
    if instance_label not in classes:
        raise ArgumentError(f"instance label {instance_label!r} not among {classes}")
    schema = dataset.schema
    instance = schema.validate_row(instance)

    same = [i for i, l in enumerate(dataset.labels) if l == instance_label]
    other = [i for i, l in enumerate(dataset.labels) if l != instance_label]
    rng = np.random.default_rng(seed)
    partners = [same[i] for i in rng.integers(0, len(same), n // 2)]
    partners += [other[i] for i in rng.integers(0, len(other), n // 2)]
    lam = rng.beta(alpha, alpha, n)
    cat_cols = [j for j, c in enumerate(schema.columns) if not c.is_numeric]
    coins = rng.random((n, len(cat_cols)))

    rows = []
    soft_labels = []
    label_index = {c: i for i, c in enumerate(classes)}
    for i, (p, l) in enumerate(zip(partners, lam)):
        partner = dataset.rows[p]
        row = []
        for j, col in enumerate(schema.columns):
            if col.is_numeric:
                row.append(l * float(instance[j]) + (1.0 - l) * float(partner[j]))
            else:
                take_instance = coins[i, cat_cols.index(j)] < l
                row.append(instance[j] if take_instance else partner[j])
        rows.append(tuple(row))
        soft = [0.0] * len(classes)
        soft[label_index[instance_label]] += l
        soft[label_index[dataset.labels[p]]] += 1.0 - l
        soft_labels.append(soft)
    return rows, soft_labels, classes


def quartile_bins(dataset: Dataset, name: str) -> list[float]:
    """The three nearest-rank quartile cut points of a numeric column."""
    values = sorted(dataset.column_values(name))
    if not values:
        raise ArgumentError(f"no observed values for {name!r}")
    return [nearest_rank(values, p) for p in (0.25, 0.5, 0.75)]


def _bin_of(cuts, value) -> int:
    b = 0
    while b < len(cuts) and value > cuts[b]:
        b += 1
    return b


def _bin_label(cuts, b) -> str:
    edges = [format_number(c) for c in cuts]
    if b == 0:
        return f"<={edges[0]}"
    if b == len(cuts):
        return f">{edges[-1]}"
    return f"({edges[b - 1]}, {edges[b]}]"


def discretize(rows, instance, dataset: Dataset):
    """Binary interpretable representation relative to one instance.

    Numeric features are quartile-binned on the dataset; a row encodes 1
    when it falls in the same bin as the instance. Categorical features
    encode 1 on exact equality with the instance's token. Returns the binary
    matrix and the derived feature names.
    """
    schema = dataset.schema
    instance = schema.validate_row(instance)
    encoded = np.zeros((len(rows), len(schema.columns)))
    names = []
    for j, col in enumerate(schema.columns):
        if col.is_numeric:
            cuts = quartile_bins(dataset, col.name)
            target = _bin_of(cuts, float(instance[j]))
            encoded[:, j] = [1.0 if _bin_of(cuts, float(r[j])) == target else 0.0
                             for r in rows]
            names.append(f"{col.name} in {_bin_label(cuts, target)}")
        else:
            encoded[:, j] = [1.0 if r[j] == instance[j] else 0.0 for r in rows]
            names.append(f"{col.name} = {instance[j]}")
    return encoded, names


def kernel_weights(rows, instance, schema: FeatureSchema, width: float) -> np.ndarray:
    """Exponential proximity weights exp(-d^2/width^2) in (0, 1]."""
    if width <= 0:
        raise ArgumentError("kernel width must be > 0")
    d = distance_matrix(schema, [instance], rows)[0]
    return np.exp(-(d * d) / (width * width))


@dataclass(frozen=True)
class RidgeFit:
    """Weighted ridge regression fit; the penalty spares the intercept."""

    coef: np.ndarray
    intercept: float

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef + self.intercept


def _check_fit_inputs(X, weights):
    X = np.asarray(X, dtype=np.float64)
    if len(X) < 2:
        raise ArgumentError("need at least 2 rows to fit a surrogate")
    w = np.ones(len(X)) if weights is None else np.asarray(weights, dtype=np.float64)
    if len(w) != len(X):
        raise ArgumentError("weights and rows lengths differ")
    if (w < 0).any() or w.sum() == 0:
        raise ArgumentError("weights must be >= 0 and not all zero")
    return X, w


def fit_ridge(X, targets, weights=None, ridge_lambda: float = 1.0) -> RidgeFit:
    """Closed-form weighted ridge; singular unpenalised systems raise FitError."""
    X, w = _check_fit_inputs(X, weights)
    y = np.asarray(targets, dtype=np.float64)
    ones = np.ones((len(X), 1))
    design = np.hstack([ones, X])
    penalty = np.diag([0.0] + [ridge_lambda] * X.shape[1])
    lhs = design.T @ (design * w[:, None]) + penalty
    rhs = design.T @ (w * y)
    try:
        theta = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise FitError(
            "ridge system is singular; use a penalty > 0"
        ) from exc
    return RidgeFit(coef=theta[1:], intercept=float(theta[0]))


@dataclass(frozen=True)
class TreeFit:
    """Weighted CART surrogate over class tokens."""

    tree: DecisionTree
    classes: tuple

    def predict(self, X) -> list:
        return [self.classes[i] for i in self.tree.predict(X)]

    @property
    def importances(self) -> np.ndarray:
        return self.tree.feature_importances_


def fit_tree(X, targets, weights=None, max_depth: int = 3,
             is_categorical=None) -> TreeFit:
    """Weighted Gini CART on class tokens, to a depth limit."""
    X, w = _check_fit_inputs(X, weights)
    classes = sorted(set(targets))
    index = {c: i for i, c in enumerate(classes)}
    y = np.array([index[t] for t in targets])
    if is_categorical is None:
        is_categorical = [False] * X.shape[1]
    tree = DecisionTree(max_depth=max_depth).fit(X, is_categorical, y, len(classes), w)
    return TreeFit(tree=tree, classes=tuple(classes))


def fit_surrogate(X, targets, weights=None, kind: str = "ridge",
                  ridge_lambda: float = 1.0, max_depth: int = 3,
                  is_categorical=None):
    """Dispatch to the ridge or tree fit; the two cover steps e) of the pipeline."""
    if kind == "ridge":
        return fit_ridge(X, targets, weights, ridge_lambda)
    if kind == "tree":
        return fit_tree(X, targets, weights, max_depth, is_categorical)
    raise ArgumentError(f"unknown surrogate kind {kind!r}")


def select_features(X, targets, weights, m: int, ridge_lambda: float = 1.0):
    """Greedy forward selection by weighted ridge error; returns (indices, diagnostic).

    Deterministic: equal error reductions resolve to the lowest feature
    index. An all-constant matrix cannot be ranked, so the first m indices
    come back with a diagnostic instead.
    """
    X = np.asarray(X, dtype=np.float64)
    if not 1 <= m <= X.shape[1]:
        raise ArgumentError(f"m must be in [1, {X.shape[1]}]")
    w = np.ones(len(X)) if weights is None else np.asarray(weights, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)

    if all((X[:, j] == X[0, j]).all() for j in range(X.shape[1])):
        return list(range(m)), "all features are constant; selected the first m"

    def weighted_sse(columns):
        fit = fit_ridge(X[:, columns], y, w, ridge_lambda)
        residual = y - fit.predict(X[:, columns])
        return float(np.sum(w * residual * residual))

    selected: list[int] = []
    while len(selected) < m:
        best_j, best_sse = None, None
        for j in range(X.shape[1]):
            if j in selected:
                continue
            sse = weighted_sse(selected + [j])
            if best_sse is None or sse < best_sse:
                best_j, best_sse = j, sse
        selected.append(best_j)
    return sorted(selected), None


@dataclass(frozen=True)
class SurrogateExplanation:
    """What the surrogate says about the black box, plus how well it mimics it."""

    kind: str
    fidelity: float
    explained_class: str
    linear: dict | None = None
    tree: dict | None = None
    diagnostic: str | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "fidelity": self.fidelity,
            "explained_class": self.explained_class,
            "linear": self.linear,
            "tree": self.tree,
            "diagnostic": self.diagnostic,
        }


def _encode_for_tree(schema, rows):
    out = np.empty((len(rows), len(schema.columns)))
    for j, col in enumerate(schema.columns):
        if col.is_numeric:
            out[:, j] = [float(r[j]) for r in rows]
        else:
            codes = {v: i for i, v in enumerate(col.values)}
            out[:, j] = [codes.get(r[j], -1) for r in rows]
    return out, [not c.is_numeric for c in schema.columns]


def _encode_for_ridge(schema, rows):
    columns, names = [], []
    for j, col in enumerate(schema.columns):
        if col.is_numeric:
            columns.append(np.array([float(r[j]) for r in rows]))
            names.append(col.name)
        else:
            for value in col.values:
                columns.append(np.array([1.0 if r[j] == value else 0.0 for r in rows]))
                names.append(f"{col.name} = {value}")
    return np.column_stack(columns), names


def _decode_rule(path, schema, names, discretized):
    rule = []
    for feature, op, value in path:
        if discretized:
            rule.append({"feature": names[feature], "op": op, "value": value})
            continue
        col = schema.columns[feature]
        if col.is_numeric:
            rule.append({"feature": col.name, "op": op, "value": value})
        else:
            token = col.values[int(value)] if 0 <= int(value) < len(col.values) else None
            rule.append({"feature": col.name, "op": op, "value": token})
    return rule


def explain(model, dataset: Dataset, instance=None,
            config: SurrogateConfig | None = None) -> SurrogateExplanation:
    """Run the full surrogate pipeline for one instance or the whole population."""
    config = config or SurrogateConfig()
    schema = dataset.schema
    if config.locality == "local":
        if instance is None:
            raise ArgumentError("local explanations need an instance")
        instance = tuple(schema.validate_row(instance))
    elif instance is not None:
        raise ArgumentError("global explanations take no instance")

    # b) augmentation
    soft_labels = mix_classes = None
    if config.sampler == "mixup":
        if config.locality != "local":
            raise ArgumentError("mixup sampling is anchored to an instance; use local")
        predicted = predict_labels(model, list(dataset.rows) + [list(instance)])
        labelled = Dataset(schema, dataset.rows, tuple(predicted[:-1]))
        samples, soft_labels, mix_classes = sample_mixup(
            labelled, instance, predicted[-1], config.n_samples, config.alpha, config.seed)
    elif config.locality == "local":
        samples = sample_normal(dataset, instance, config.n_samples, config.scale,
                                config.seed)
    else:
        samples = sample_global(dataset, config.n_samples, config.scale, config.seed)

    # c) black-box labelling
    bb_labels = predict_labels(model, samples)
    classes = tuple(getattr(model, "classes", ()) or sorted(set(bb_labels)))
    if config.locality == "local":
        explained_class = predict_labels(model, [list(instance)])[0]
    else:
        explained_class = classes[-1]
    diagnostic = None
    if len(set(bb_labels)) == 1:
        diagnostic = "sampled labels are single-class; fidelity is trivial"

    # a) representation
    if config.discretize:
        if config.locality != "local":
            raise ArgumentError("interpretable representation needs a local instance")
        X, names = discretize(samples, instance, dataset)
        is_cat = [False] * X.shape[1]
        instance_encoded = np.ones(X.shape[1])
    elif config.kind == "tree":
        X, is_cat = _encode_for_tree(schema, samples)
        names = schema.names
        instance_encoded = (_encode_for_tree(schema, [instance])[0][0]
                            if instance is not None else None)
    else:
        X, names = _encode_for_ridge(schema, samples)
        is_cat = [False] * X.shape[1]
        instance_encoded = None

    # d) proximity weighting and feature selection
    weights = None
    if config.kernel_width is not None and config.locality == "local":
        weights = kernel_weights(samples, instance, schema, config.kernel_width)

    if soft_labels is not None:
        target_idx = mix_classes.index(explained_class)
        ridge_targets = np.array([s[target_idx] for s in soft_labels])
        tree_targets = [mix_classes[int(np.argmax(s))] for s in soft_labels]
    else:
        proba = try_predict_proba(model, samples)
        if proba is not None:
            proba_classes, matrix = proba
            target_idx = list(proba_classes).index(explained_class)
            ridge_targets = np.array([row[target_idx] for row in matrix])
        else:
            ridge_targets = np.array([1.0 if l == explained_class else 0.0
                                      for l in bb_labels])
        tree_targets = bb_labels

    selection_note = None
    if config.top_m is not None:
        kept, selection_note = select_features(X, ridge_targets, weights,
                                               config.top_m, config.ridge_lambda)
        X = X[:, kept]
        names = [names[j] for j in kept]
        is_cat = [is_cat[j] for j in kept]
        if instance_encoded is not None:
            instance_encoded = instance_encoded[kept]

    # e) surrogate fit, f) explanation extraction
    eval_weights = weights if weights is not None else np.ones(len(X))
    if config.kind == "ridge":
        fit = fit_ridge(X, ridge_targets, weights, config.ridge_lambda)
        surrogate_says = fit.predict(X) >= 0.5
        black_box_says = np.array([l == explained_class for l in bb_labels])
        agree = (surrogate_says == black_box_says).astype(np.float64)
        fidelity = float(np.sum(eval_weights * agree) / np.sum(eval_weights))
        linear = {"weights": {n: float(c) for n, c in zip(names, fit.coef)},
                  "intercept": fit.intercept}
        tree_part = None
    else:
        fit = fit_tree(X, tree_targets, weights, config.max_depth, is_cat)
        surrogate_says = fit.predict(X)
        agree = np.array([a == b for a, b in zip(surrogate_says, bb_labels)],
                         dtype=np.float64)
        fidelity = float(np.sum(eval_weights * agree) / np.sum(eval_weights))
        importances = {n: float(v) for n, v in zip(names, fit.importances)}
        rule = []
        if config.locality == "local":
            path = fit.tree.decision_path(instance_encoded)
            rule = _decode_rule(path, schema, names, config.discretize)
        tree_part = {"rule": rule, "importances": importances}
        linear = None

    if diagnostic and selection_note:
        diagnostic = f"{diagnostic}; {selection_note}"
    elif selection_note:
        diagnostic = selection_note
    return SurrogateExplanation(config.kind, fidelity, explained_class,
                                linear, tree_part, diagnostic)


@dataclass(frozen=True)
class IcePd:
    """Individual conditional expectation curves and their partial-dependence mean."""

    feature: str
    grid: tuple
    ice: tuple
    pd: tuple
    response: str  # "probability" of the target class, or "class_index"
    target_class: str | None

    def to_json(self) -> dict:
        return {
            "feature": self.feature,
            "grid": list(self.grid),
            "ice": [list(row) for row in self.ice],
            "pd": list(self.pd),
            "response": self.response,
            "target_class": self.target_class,
        }


def ice_pd(model, dataset: Dataset, feature: str, grid, positive_class=None) -> IcePd:
    """Predictions for every row with one feature swept over a grid.

    Uses the probability of the positive class when the model exposes
    probabilities (default: last class in sorted order), otherwise the
    predicted class index. The partial-dependence curve is the column mean
    of the ICE matrix.
    """
    column = dataset.schema.column(feature)
    grid = list(grid)
    if not grid:
        raise ArgumentError("grid must not be empty")
    if not column.is_numeric:
        for v in grid:
            if v not in column.values:
                raise ArgumentError(f"grid value {v!r} not allowed for {feature!r}")
    j = dataset.schema.index(feature)

    ice = np.empty((len(dataset), len(grid)))
    proba_mode = None
    target_class = None
    for g, value in enumerate(grid):
        rows = [tuple(value if c == j else cell for c, cell in enumerate(r))
                for r in dataset.rows]
        proba = try_predict_proba(model, rows)
        if proba is not None:
            classes, matrix = proba
            if target_class is None:
                target_class = positive_class if positive_class is not None \
                    else sorted(classes)[-1]
                if target_class not in classes:
                    raise ArgumentError(f"unknown positive class {target_class!r}")
            t = list(classes).index(target_class)
            ice[:, g] = [row[t] for row in matrix]
            proba_mode = True
        else:
            labels = predict_labels(model, rows)
            classes = list(getattr(model, "classes", ()) or sorted(set(labels)))
            ice[:, g] = [classes.index(l) for l in labels]
            proba_mode = False

    pd_curve = ice.mean(axis=0) if len(dataset) else np.zeros(len(grid))
    return IcePd(
        feature=feature,
        grid=tuple(grid),
        ice=tuple(map(tuple, ice.tolist())),
        pd=tuple(pd_curve.tolist()),
        response="probability" if proba_mode else "class_index",
        target_class=target_class,
    )
