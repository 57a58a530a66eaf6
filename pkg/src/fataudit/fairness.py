"""Group fairness metrics, performance disparity, systemic bias, threshold fitting.

All rates derive from the binary confusion of predictions against one
explicit positive class; rates with a zero denominator are reported as
undefined (None), never coerced to a number.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .errors import ArgumentError, FitError, SchemaError
from .grouping import GroupPartition
from .tabular import Dataset

FAIRNESS_CRITERIA = ("demographic_parity", "equal_opportunity", "equal_accuracy")
PERFORMANCE_METRICS = ("accuracy", "tpr", "tnr", "fpr", "fnr", "positive_rate")

_CRITERION_STAT = {
    "demographic_parity": "positive_rate",
    "equal_opportunity": "tpr",
    "equal_accuracy": "accuracy",
}


def confusion(y_true, y_pred, positive_class) -> dict:
    """Binary confusion counts and rates of predictions vs one positive class."""
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise ArgumentError("y_true and y_pred lengths differ")
    tp = fp = tn = fn = 0
    for t, p in zip(y_true, y_pred):
        if p == positive_class:
            if t == positive_class:
                tp += 1
            else:
                fp += 1
        else:
            if t == positive_class:
                fn += 1
            else:
                tn += 1

    def rate(num, den):
        return num / den if den > 0 else None

    n = len(y_true)
    return {
        "tp": tp, "fp": fp, "tn": tn, "fn": fn,
        "accuracy": rate(tp + tn, n),
        "tpr": rate(tp, tp + fn),
        "tnr": rate(tn, tn + fp),
        "fpr": rate(fp, fp + tn),
        "fnr": rate(fn, fn + tp),
        "positive_rate": rate(tp + fp, n),
    }


@dataclass(frozen=True)
class DisparityMatrix:
    """Pairwise absolute statistic gaps between groups, binarised by a tolerance.

    Symmetric with a zero diagonal; a pair is flagged when its gap exceeds
    the tolerance. Pairs with an undefined statistic carry a None value, are
    marked undefined and are never flagged.
    """

    criterion: str
    tolerance: float
    group_labels: tuple[str, ...]
    stats: tuple
    values: tuple
    flags: tuple
    undefined: tuple

    @property
    def flag_count(self) -> int:
        """Number of flagged unordered pairs."""
        return sum(self.flags[i][j]
                   for i in range(len(self.group_labels))
                   for j in range(i + 1, len(self.group_labels)))

    def flagged_pairs(self) -> list[tuple[str, str]]:
        labels = self.group_labels
        return [(labels[i], labels[j])
                for i in range(len(labels)) for j in range(i + 1, len(labels))
                if self.flags[i][j]]

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "tolerance": self.tolerance,
            "groups": list(self.group_labels),
            "values": [list(row) for row in self.values],
            "flags": [list(row) for row in self.flags],
            "undefined": [list(row) for row in self.undefined],
        }


def _matrix_from_stats(criterion, tolerance, labels, stats) -> DisparityMatrix:
    if tolerance < 0:
        raise ArgumentError("tolerance must be >= 0")
    g = len(labels)
    values = [[0.0] * g for _ in range(g)]
    flags = [[0] * g for _ in range(g)]
    undefined = [[0] * g for _ in range(g)]
    for i in range(g):
        for j in range(i + 1, g):
            if stats[i] is None or stats[j] is None:
                values[i][j] = values[j][i] = None
                undefined[i][j] = undefined[j][i] = 1
            else:
                gap = abs(stats[i] - stats[j])
                values[i][j] = values[j][i] = gap
                if gap > tolerance:
                    flags[i][j] = flags[j][i] = 1
    return DisparityMatrix(criterion, tolerance, tuple(labels), tuple(stats),
                           tuple(map(tuple, values)), tuple(map(tuple, flags)),
                           tuple(map(tuple, undefined)))


def _group_stats(part: GroupPartition, y_true, y_pred, stat_name, positive_class):
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise ArgumentError("y_true and y_pred lengths differ")
    if part.total != len(y_true):
        raise ArgumentError("partition does not cover the prediction vector")
    if y_true and positive_class not in set(y_true) | set(y_pred):
        raise ArgumentError(f"positive class {positive_class!r} never occurs")
    stats = []
    for _, idx in part.groups:
        cm = confusion([y_true[i] for i in idx], [y_pred[i] for i in idx], positive_class)
        stats.append(cm[stat_name])
    return stats


def group_fairness(part: GroupPartition, y_true, y_pred, criterion: str,
                   positive_class, tolerance: float = 0.2) -> DisparityMatrix:
    """Pairwise group fairness: demographic parity, equal opportunity or equal accuracy."""
    if criterion not in _CRITERION_STAT:
        raise ArgumentError(
            f"unknown criterion {criterion!r}; expected one of {FAIRNESS_CRITERIA}"
        )
    stats = _group_stats(part, y_true, y_pred, _CRITERION_STAT[criterion], positive_class)
    return _matrix_from_stats(criterion, tolerance, part.labels, stats)


def performance_disparity(part: GroupPartition, y_true, y_pred, metric: str,
                          positive_class, tolerance: float = 0.2) -> DisparityMatrix:
    """Pairwise disparity of an arbitrary confusion-derived rate across groups."""
    canonical = metric.lower().replace("-", "_")
    if canonical not in PERFORMANCE_METRICS:
        raise ArgumentError(
            f"unknown metric {metric!r}; expected one of {PERFORMANCE_METRICS}"
        )
    stats = _group_stats(part, y_true, y_pred, canonical, positive_class)
    return _matrix_from_stats(canonical, tolerance, part.labels, stats)


def systemic_bias(dataset: Dataset, protected_features) -> list[tuple[int, int]]:
    """Row pairs identical on all non-protected features but labelled differently.

    Each reported pair differs on at least one protected feature, so the
    label difference cannot be explained by anything else in the data.
    """
    protected = list(protected_features)
    if not protected:
        raise ArgumentError("protected feature set must not be empty")
    names = dataset.schema.names
    for p in protected:
        if p not in names:
            raise SchemaError(f"unknown protected feature {p!r}")
    rest = [n for n in names if n not in protected]
    if not rest:
        raise ArgumentError("protected features cover every column; nothing to compare")

    rest_idx = [dataset.schema.index(n) for n in rest]
    prot_idx = [dataset.schema.index(n) for n in protected]
    buckets: dict[tuple, list[int]] = {}
    for i, row in enumerate(dataset.rows):
        buckets.setdefault(tuple(row[j] for j in rest_idx), []).append(i)

    pairs = []
    for members in buckets.values():
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                i, j = members[a], members[b]
                if dataset.labels[i] == dataset.labels[j]:
                    continue
                ri, rj = dataset.rows[i], dataset.rows[j]
                if any(ri[p] != rj[p] for p in prot_idx):
                    pairs.append((i, j))
    return sorted(pairs)


@dataclass(frozen=True)
class ThresholdAssignment:
    """Per-group score thresholds (score >= t means positive) and what they achieve."""

    criterion: str
    thresholds: dict
    achieved: dict
    max_gap: float
    tolerance: float

    @property
    def within_tolerance(self) -> bool:
        return self.max_gap <= self.tolerance

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "thresholds": dict(self.thresholds),
            "achieved": dict(self.achieved),
            "max_gap": self.max_gap,
            "within_tolerance": self.within_tolerance,
            "tolerance": self.tolerance,
        }


def _threshold_candidates(scores, truth, stat_name, positive_class, group_label):
    """(stat, accuracy, threshold) per candidate threshold, ascending thresholds."""
    is_pos = [t == positive_class for t in truth]
    if stat_name == "tpr" and not any(is_pos):
        raise FitError(
            f"equal_opportunity is undefined for group {group_label!r}: no positives"
        )
    out = []
    for thr in sorted(set(scores)) + [math.inf]:
        pred_pos = [s >= thr for s in scores]
        n = len(scores)
        if stat_name == "positive_rate":
            stat = sum(pred_pos) / n
        elif stat_name == "tpr":
            hits = sum(1 for p, t in zip(pred_pos, is_pos) if p and t)
            stat = hits / sum(is_pos)
        else:
            stat = sum(1 for p, t in zip(pred_pos, is_pos) if p == t) / n
        accuracy = sum(1 for p, t in zip(pred_pos, is_pos) if p == t) / n
        out.append((stat, accuracy, thr))
    return out


def fit_group_thresholds(scores, part: GroupPartition, y_true, criterion: str,
                         positive_class, tolerance: float = 0.2) -> ThresholdAssignment:
    """Choose one decision threshold per group over the observed score grid.

    Minimises the largest pairwise gap of the criterion's statistic; ties are
    broken by total accuracy, then by the lexicographically smallest
    threshold tuple.
    """
    if criterion not in _CRITERION_STAT:
        raise ArgumentError(
            f"unknown criterion {criterion!r}; expected one of {FAIRNESS_CRITERIA}"
        )
    scores = [float(s) for s in scores]
    if any(not math.isfinite(s) for s in scores):
        raise ArgumentError("scores must be finite")
    y_true = list(y_true)
    if len(scores) != len(y_true):
        raise ArgumentError("scores and y_true lengths differ")
    if part.total != len(scores):
        raise ArgumentError("partition does not cover the score vector")
    stat_name = _CRITERION_STAT[criterion]

    candidates = []
    for label, idx in part.groups:
        if not idx:
            raise ArgumentError(f"group {label!r} is empty")
        candidates.append(_threshold_candidates(
            [scores[i] for i in idx], [y_true[i] for i in idx],
            stat_name, positive_class, label,
        ))

    per_group_values = [sorted({stat for stat, _, _ in cand}) for cand in candidates]
    all_values = sorted({v for values in per_group_values for v in values})

    def minimal_hi(lo):
        hi = lo
        for values in per_group_values:
            k = bisect.bisect_left(values, lo)
            if k == len(values):
                return None
            hi = max(hi, values[k])
        return hi

    best_range = None
    for lo in all_values:
        hi = minimal_hi(lo)
        if hi is not None and (best_range is None or hi - lo < best_range):
            best_range = hi - lo
    if best_range is None:
        raise FitError("no feasible threshold assignment")

    best = None
    for lo in all_values:
        hi = lo + best_range
        chosen = []
        for cand in candidates:
            picks = [(stat, acc, thr) for stat, acc, thr in cand if lo <= stat <= hi]
            if not picks:
                chosen = None
                break
            best_acc = max(acc for _, acc, _ in picks)
            chosen.append(next(p for p in picks if p[1] == best_acc))
        if chosen is None:
            continue
        total_acc = sum(acc for _, acc, _ in chosen)
        thresholds = tuple(thr for _, _, thr in chosen)
        key = (-total_acc, thresholds)
        if best is None or key < best[0]:
            best = (key, chosen)

    chosen = best[1]
    labels = part.labels
    stats = [stat for stat, _, _ in chosen]
    gap = max(stats) - min(stats) if len(stats) > 1 else 0.0
    return ThresholdAssignment(
        criterion=criterion,
        thresholds={label: thr for label, (_, _, thr) in zip(labels, chosen)},
        achieved={label: stat for label, (stat, _, _) in zip(labels, chosen)},
        max_gap=gap,
        tolerance=tolerance,
    )
