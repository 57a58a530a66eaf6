"""Weighted CART trees over mixed numeric/categorical features.

Features arrive as a float matrix; categorical columns hold integer codes
and are split by equality (code == value goes left), numeric columns by
midpoint thresholds between consecutive distinct values (value <= t goes
left). Splitting is greedy on weighted Gini impurity and fully
deterministic: gain ties prefer the lowest feature index, then the smallest
threshold or code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_NO_GAIN = -1.0


@dataclass
class Node:
    counts: np.ndarray
    feature: int = -1
    threshold: float = 0.0
    is_category: bool = False
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self):
        return self.feature < 0


def _gini(counts: np.ndarray, total: float) -> float:
    if total <= 0.0:
        return 0.0
    return 1.0 - float(np.dot(counts, counts)) / (total * total)


class DecisionTree:
    """Greedy Gini CART with sample weights and deterministic tie-breaking."""

    def __init__(self, max_depth: int = 4, min_samples_leaf: int = 1):
        if max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.root: Node | None = None
        self.n_classes = 0
        self.feature_importances_: np.ndarray | None = None

    def fit(self, X, is_categorical, y, n_classes, sample_weight=None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes = n_classes
        self._is_cat = np.asarray(is_categorical, dtype=bool)
        w = (np.ones(len(y)) if sample_weight is None
             else np.asarray(sample_weight, dtype=np.float64))
        self._importances = np.zeros(X.shape[1])
        self._total_weight = float(w.sum())
        self.root = self._build(X, y, w, np.arange(len(y)), depth=0)
        total = self._importances.sum()
        self.feature_importances_ = (
            self._importances / total if total > 0 else self._importances
        )
        return self

    def _node_counts(self, y, w, idx):
        counts = np.zeros(self.n_classes)
        np.add.at(counts, y[idx], w[idx])
        return counts

    def _build(self, X, y, w, idx, depth):
        counts = self._node_counts(y, w, idx)
        node = Node(counts=counts)
        total = float(counts.sum())
        if (depth >= self.max_depth or len(idx) < 2 * self.min_samples_leaf
                or np.count_nonzero(counts) <= 1):
            return node
        split = self._best_split(X, y, w, idx, counts, total)
        if split is None:
            return node
        gain, feature, threshold, is_cat, left_idx, right_idx = split
        if total > 0 and self._total_weight > 0:
            self._importances[feature] += (total / self._total_weight) * gain
        node.feature = feature
        node.threshold = threshold
        node.is_category = is_cat
        node.left = self._build(X, y, w, left_idx, depth + 1)
        node.right = self._build(X, y, w, right_idx, depth + 1)
        # A weight-empty child cannot vote; let it inherit this node's counts.
        for child in (node.left, node.right):
            if float(child.counts.sum()) == 0.0:
                child.counts = counts.copy()
                child.feature = -1
                child.left = child.right = None
        return node

    def _best_split(self, X, y, w, idx, counts, total):
        parent_gini = _gini(counts, total)
        best = None
        best_gain = _NO_GAIN
        min_leaf = self.min_samples_leaf
        for f in range(X.shape[1]):
            v = X[idx, f]
            if self._is_cat[f]:
                result = self._best_categorical(v, y[idx], w[idx], counts, total,
                                                parent_gini, min_leaf)
            else:
                result = self._best_numeric(v, y[idx], w[idx], counts, total,
                                            parent_gini, min_leaf)
            if result is not None and result[0] > best_gain:
                best_gain, threshold = result
                best = (f, threshold)
        if best is None:
            return None
        f, threshold = best
        v = X[idx, f]
        mask = (v == threshold) if self._is_cat[f] else (v <= threshold)
        return (best_gain, f, threshold, bool(self._is_cat[f]),
                idx[mask], idx[~mask])

    def _best_numeric(self, v, y, w, counts, total, parent_gini, min_leaf):
        order = np.argsort(v, kind="stable")
        sv = v[order]
        cum = np.zeros((len(v), self.n_classes))
        cum[np.arange(len(v)), y[order]] = w[order]
        np.cumsum(cum, axis=0, out=cum)
        boundaries = np.nonzero(sv[:-1] < sv[1:])[0]
        if len(boundaries) == 0:
            return None
        sizes = boundaries + 1
        valid = (sizes >= min_leaf) & (len(v) - sizes >= min_leaf)
        boundaries = boundaries[valid]
        if len(boundaries) == 0:
            return None
        left = cum[boundaries]
        right = counts[None, :] - left
        gains = self._gain(left, right, total, parent_gini)
        i = int(np.argmax(gains))
        b = boundaries[i]
        return float(gains[i]), (sv[b] + sv[b + 1]) / 2.0

    def _best_categorical(self, v, y, w, counts, total, parent_gini, min_leaf):
        codes, inverse = np.unique(v, return_inverse=True)
        if len(codes) < 2:
            return None
        left = np.zeros((len(codes), self.n_classes))
        np.add.at(left, (inverse, y), w)
        sizes = np.bincount(inverse, minlength=len(codes))
        valid = (sizes >= min_leaf) & (len(v) - sizes >= min_leaf)
        if not valid.any():
            return None
        left = left[valid]
        right = counts[None, :] - left
        gains = self._gain(left, right, total, parent_gini)
        i = int(np.argmax(gains))
        return float(gains[i]), float(codes[valid][i])

    @staticmethod
    def _gain(left, right, total, parent_gini):
        wl = left.sum(axis=1)
        wr = right.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            gl = 1.0 - np.einsum("ij,ij->i", left, left) / (wl * wl)
            gr = 1.0 - np.einsum("ij,ij->i", right, right) / (wr * wr)
        gl = np.where(wl > 0, gl, 0.0)
        gr = np.where(wr > 0, gr, 0.0)
        return parent_gini - (wl * gl + wr * gr) / total

    def leaf_counts(self, X) -> np.ndarray:
        """Weighted class counts of the leaf each row lands in."""
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((len(X), self.n_classes))
        if len(X) == 0:
            return out
        stack = [(self.root, np.arange(len(X)))]
        while stack:
            node, rows = stack.pop()
            if len(rows) == 0:
                continue
            if node.is_leaf:
                out[rows] = node.counts
                continue
            v = X[rows, node.feature]
            mask = (v == node.threshold) if node.is_category else (v <= node.threshold)
            stack.append((node.left, rows[mask]))
            stack.append((node.right, rows[~mask]))
        return out

    def predict(self, X) -> np.ndarray:
        """Class indices; ties resolved towards the lowest class index."""
        return np.argmax(self.leaf_counts(X), axis=1)

    def predict_proba(self, X) -> np.ndarray:
        counts = self.leaf_counts(X)
        totals = counts.sum(axis=1, keepdims=True)
        totals[totals == 0.0] = 1.0
        return counts / totals

    def decision_path(self, x) -> list[tuple[int, str, float]]:
        """(feature, op, value) comparisons on the root-to-leaf path of x."""
        x = np.asarray(x, dtype=np.float64)
        path = []
        node = self.root
        while not node.is_leaf:
            if node.is_category:
                if x[node.feature] == node.threshold:
                    path.append((node.feature, "==", node.threshold))
                    node = node.left
                else:
                    path.append((node.feature, "!=", node.threshold))
                    node = node.right
            else:
                if x[node.feature] <= node.threshold:
                    path.append((node.feature, "<=", node.threshold))
                    node = node.left
                else:
                    path.append((node.feature, ">", node.threshold))
                    node = node.right
        return path

    @property
    def n_splits(self) -> int:
        def count(node):
            if node is None or node.is_leaf:
                return 0
            return 1 + count(node.left) + count(node.right)
        return count(self.root)
