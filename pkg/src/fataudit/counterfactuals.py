"""Model-agnostic counterfactual search over discretised feature grids.

The search exhaustively enumerates every subset of at most k searchable
features and every combination of grid values on it, keeps the candidates
whose black-box prediction satisfies the requested mode, and ranks them by
(number of changes, distance to the instance). That brute-force shape is
deliberate: it is verifiable against an independent enumeration oracle and
entirely model-agnostic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .density import DensityEstimator, score_rows
from .errors import ArgumentError
from .models import predict_labels
from .tabular import Dataset, FeatureSchema, distance_matrix, format_number, nearest_rank

MODES = ("implicit", "explicit", "same_class")


def default_grids(dataset: Dataset, features=None) -> dict:
    """Per-feature candidate values: numeric deciles, categorical value-sets."""
    names = features if features is not None else dataset.schema.names
    grids = {}
    for name in names:
        col = dataset.schema.column(name)
        if col.is_numeric:
            values = sorted(dataset.column_values(name))
            if not values:
                raise ArgumentError(f"no observed values to build a grid for {name!r}")
            deciles = []
            for i in range(1, 10):
                q = nearest_rank(values, i / 10)
                if not deciles or q != deciles[-1]:
                    deciles.append(q)
            grids[name] = tuple(deciles)
        else:
            grids[name] = tuple(col.values)
    return grids


@dataclass(frozen=True)
class CounterfactualConfig:
    """Search space description for counterfactual enumeration."""

    schema: FeatureSchema
    grids: dict
    searchable: tuple[str, ...] = ()
    required: tuple[str, ...] = ()
    k: int = 2
    mode: str = "implicit"
    target_class: str | None = None
    max_results: int = 10

    def __post_init__(self):
        searchable = tuple(self.searchable) or tuple(sorted(self.grids))
        object.__setattr__(self, "searchable", searchable)
        object.__setattr__(self, "required", tuple(self.required))
        if not searchable:
            raise ArgumentError("searchable feature set must not be empty")
        for name in searchable:
            self.schema.column(name)
            if not self.grids.get(name):
                raise ArgumentError(f"empty grid for searchable feature {name!r}")
        missing = set(self.required) - set(searchable)
        if missing:
            raise ArgumentError(f"required features not searchable: {sorted(missing)}")
        if self.k < 1:
            raise ArgumentError("k must be >= 1")
        if self.k > len(searchable):
            raise ArgumentError("k exceeds the number of searchable features")
        if self.mode not in MODES:
            raise ArgumentError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.mode == "explicit" and self.target_class is None:
            raise ArgumentError("explicit mode needs a target class")
        if self.max_results < 1:
            raise ArgumentError("max_results must be >= 1")


def config_for_dataset(dataset: Dataset, **kwargs) -> CounterfactualConfig:
    """Config with default decile/value-set grids over the dataset's features."""
    searchable = kwargs.pop("searchable", None) or tuple(dataset.schema.names)
    grids = kwargs.pop("grids", None) or default_grids(dataset, searchable)
    return CounterfactualConfig(dataset.schema, grids, tuple(searchable), **kwargs)


@dataclass(frozen=True)
class Counterfactual:
    """A minimally edited variant of an instance and what the model made of it."""

    changes: tuple  # (feature, old, new) in schema column order
    resulting_class: str
    distance: float
    row: tuple
    density_score: float | None = None

    def sort_key(self):
        named = tuple(sorted((name, new) for name, _, new in self.changes))
        return (len(self.changes), self.distance, named)

    def to_json(self) -> dict:
        return {
            "changes": [{"feature": f, "old": old, "new": new}
                        for f, old, new in self.changes],
            "class": self.resulting_class,
            "distance": self.distance,
            "density": self.density_score,
        }

    def sentence(self, subject: str = "this person") -> str:
        """Render the foil as prose, e.g. for reports and the what-if UI."""
        def fmt(v):
            return format_number(v) if isinstance(v, (int, float)) else str(v)

        parts = [f'{fmt(new)} "{name}" instead of {fmt(old)}'
                 for name, old, new in self.changes]
        clause = " and ".join(parts)
        text = (f"Had {subject} had {clause}, {subject} would have been "
                f'predicted as "{self.resulting_class}".')
        if self.density_score is not None:
            text += f" (Density score: {round(self.density_score, 2)}.)"
        return text


@dataclass(frozen=True)
class CounterfactualSearch:
    counterfactuals: tuple[Counterfactual, ...]
    diagnostic: str | None = None

    def __iter__(self):
        return iter(self.counterfactuals)

    def __len__(self):
        return len(self.counterfactuals)

    def to_json(self) -> dict:
        return {
            "counterfactuals": [c.to_json() for c in self.counterfactuals],
            "diagnostic": self.diagnostic,
        }


def _enumerate(model, instance, config: CounterfactualConfig, subset_ok):
    """Shared enumeration: subsets of size <= k passing ``subset_ok``."""
    schema = config.schema
    instance = tuple(schema.validate_row(instance))
    original = predict_labels(model, [instance])[0]

    candidates = []  # (changes, row)
    names = [n for n in schema.names if n in config.searchable]
    for size in range(1, config.k + 1):
        for subset in itertools.combinations(names, size):
            if not subset_ok(set(subset)):
                continue
            pools = []
            for name in subset:
                current = instance[schema.index(name)]
                pool = [v for v in config.grids[name] if v != current]
                pools.append([(name, current, v) for v in pool])
            if any(not p for p in pools):
                continue
            for combo in itertools.product(*pools):
                row = list(instance)
                for name, _, new in combo:
                    row[schema.index(name)] = new
                candidates.append((combo, tuple(row)))

    kept = []
    if candidates:
        predicted = predict_labels(model, [row for _, row in candidates])
        distances = distance_matrix(schema, [instance], [row for _, row in candidates])[0]
        for (changes, row), cls, dist in zip(candidates, predicted, distances):
            if config.mode == "implicit" and cls == original:
                continue
            if config.mode == "explicit" and cls != config.target_class:
                continue
            if config.mode == "same_class" and cls != original:
                continue
            kept.append(Counterfactual(changes, cls, float(dist), row))

    kept.sort(key=Counterfactual.sort_key)
    kept = kept[: config.max_results]
    diagnostic = None if kept else "search exhausted: no candidate satisfies the mode"
    return CounterfactualSearch(tuple(kept), diagnostic), original


def find_counterfactuals(model, instance, config: CounterfactualConfig) -> CounterfactualSearch:
    """Ranked counterfactuals; every required feature changes in every result."""
    required = set(config.required)
    search, _ = _enumerate(model, instance, config, lambda s: required <= s)
    return search


def same_class_variations(model, instance, config: CounterfactualConfig) -> CounterfactualSearch:
    """Feature changes that leave the prediction untouched."""
    return find_counterfactuals(model, instance, replace(config, mode="same_class",
                                                         target_class=None))


def score_feasibility(counterfactuals, estimator: DensityEstimator) -> list[Counterfactual]:
    """Annotate foils with density scores and re-rank: feasible (dense) first."""
    cfs = list(counterfactuals)
    if not cfs:
        return []
    scores = score_rows(estimator, [c.row for c in cfs])
    annotated = [replace(c, density_score=float(s)) for c, s in zip(cfs, scores)]
    annotated.sort(key=lambda c: (c.density_score, c.distance, c.sort_key()))
    return annotated


@dataclass(frozen=True)
class FairnessVerdict:
    """Individual-fairness verdict for one instance, with the evidence found."""

    verdict: str  # "fair" | "unfair"
    counterfactuals: tuple[Counterfactual, ...]
    scope: dict

    @property
    def is_fair(self) -> bool:
        return self.verdict == "fair"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "counterfactuals": [c.to_json() for c in self.counterfactuals],
            "scope": self.scope,
        }


def counterfactual_fairness(model, instance, protected_features,
                            config: CounterfactualConfig) -> FairnessVerdict:
    """Disparate-treatment check: does any foil owe its flip to a protected change?

    Candidate foils must flip the prediction and include at least one
    protected-feature change. Each one is then compared against its twin with
    the protected features reverted to the instance's values: only foils that
    predict differently from their twin witness an actual dependence on the
    protected attributes, so models that ignore them are always fair. A
    "fair" verdict only certifies the configured grids and change budget,
    which the scope field records.
    """
    protected = tuple(protected_features)
    if not protected:
        raise ArgumentError("protected feature set must not be empty")
    missing = set(protected) - set(config.searchable)
    if missing:
        raise ArgumentError(f"protected features not searchable: {sorted(missing)}")
    # rank-truncating before the dependence filter could hide real evidence
    search_config = replace(config, mode="implicit", target_class=None,
                            max_results=10 ** 9)
    prot = set(protected)
    search, _ = _enumerate(model, instance, search_config, lambda s: bool(s & prot))

    evidence = []
    if search.counterfactuals:
        schema = config.schema
        prot_idx = {schema.index(p) for p in protected}
        canonical = schema.validate_row(instance)
        twins = [tuple(canonical[j] if j in prot_idx else cell
                       for j, cell in enumerate(c.row))
                 for c in search.counterfactuals]
        twin_classes = predict_labels(model, twins)
        evidence = [c for c, twin_class in zip(search.counterfactuals, twin_classes)
                    if c.resulting_class != twin_class]
        evidence = evidence[: config.max_results]

    scope = {
        "k": config.k,
        "protected": list(protected),
        "grid_sizes": {name: len(config.grids[name]) for name in config.searchable},
    }
    return FairnessVerdict("unfair" if evidence else "fair", tuple(evidence), scope)
