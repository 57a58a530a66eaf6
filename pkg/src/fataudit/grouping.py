"""Partition a dataset on one feature and audit sub-population representation."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ArgumentError
from .tabular import Dataset, format_number

BY_VALUE = "by-value"
BY_THRESHOLD = "by-threshold"


@dataclass(frozen=True)
class GroupPartition:
    """Disjoint row-index groups induced by one feature.

    Categorical features yield one group per observed value; numeric features
    are binned by right-closed thresholds, so T thresholds give T+1 bins and
    empty bins are kept.
    """

    feature: str
    kind: str
    groups: tuple[tuple[str, tuple[int, ...]], ...]
    thresholds: tuple[float, ...] = ()

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.groups]

    @property
    def total(self) -> int:
        return sum(len(idx) for _, idx in self.groups)

    def to_json(self) -> dict:
        return {
            "feature": self.feature,
            "kind": self.kind,
            "groups": [{"label": label, "count": len(idx)} for label, idx in self.groups],
        }


def partition(dataset: Dataset, feature: str, thresholds=None) -> GroupPartition:
    """Split row indices by a feature's unique values or threshold bins."""
    column = dataset.schema.column(feature)
    values = dataset.column_values(feature)

    if column.is_numeric:
        if thresholds is None:
            raise ArgumentError(f"numeric feature {feature!r} needs thresholds")
        cuts = [float(t) for t in thresholds]
        if not cuts:
            raise ArgumentError("thresholds must not be empty")
        if any(a >= b for a, b in zip(cuts, cuts[1:])):
            raise ArgumentError("thresholds must be strictly ascending")
        bins: list[list[int]] = [[] for _ in range(len(cuts) + 1)]
        for i, v in enumerate(values):
            b = 0
            while b < len(cuts) and v > cuts[b]:
                b += 1
            bins[b].append(i)
        labels = [f"<={format_number(cuts[0])}"]
        labels += [f"({format_number(a)}, {format_number(b)}]"
                   for a, b in zip(cuts, cuts[1:])]
        labels.append(f">{format_number(cuts[-1])}")
        groups = tuple((label, tuple(idx)) for label, idx in zip(labels, bins))
        return GroupPartition(feature, BY_THRESHOLD, groups, tuple(cuts))

    if thresholds is not None:
        raise ArgumentError(f"thresholds are invalid for categorical feature {feature!r}")
    by_value: dict[str, list[int]] = {}
    for i, v in enumerate(values):
        by_value.setdefault(v, []).append(i)
    groups = tuple((label, tuple(by_value[label])) for label in sorted(by_value))
    return GroupPartition(feature, BY_VALUE, groups)


def representation_audit(part: GroupPartition, labels, min_group_fraction: float = 0.05,
                         imbalance_ratio: float = 3.0) -> list[dict]:
    """Per-group size and class balance screening.

    A group is flagged for sampling bias when smaller than
    ``min_group_fraction`` of all rows, and for class imbalance when its
    largest per-class count exceeds ``imbalance_ratio`` times its smallest
    (a class missing entirely always flags).
    """
    if not part.groups:
        raise ArgumentError("partition has no groups")
    labels = list(labels)
    total = len(labels)
    if part.total != total or any(i >= total for _, idx in part.groups for i in idx):
        raise ArgumentError("partition does not cover the label vector")
    classes = sorted(set(labels))

    records = []
    for label, idx in part.groups:
        counts = {c: 0 for c in classes}
        for i in idx:
            counts[labels[i]] += 1
        size = len(idx)
        distribution = {c: counts[c] / size for c in classes} if size else {}
        if size:
            smallest = min(counts.values())
            largest = max(counts.values())
            imbalanced = smallest == 0 or largest / smallest > imbalance_ratio
        else:
            imbalanced = True
        records.append({
            "label": label,
            "count": size,
            "class_distribution": distribution,
            "sampling_bias": size < min_group_fraction * total,
            "class_imbalance": imbalanced,
        })
    return records
