"""
Least-squares regression trees grown leaf-wise (best split first).
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Splits must beat this fraction of the leaf's residual sum of squares
GAIN_TOL = 1e-12


@dataclass
class RegressionTree:
    """
    Flat node arrays; node 0 is the root.

    feature[i] == -1 marks a leaf whose prediction is value[i]; otherwise rows
    with x[feature] <= threshold go to left[i], the rest to right[i].
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return self.value[node]
            a = rows[active]
            go_left = X[a, feat[active]] <= self.threshold[node[active]]
            node[a] = np.where(go_left, self.left[node[active]], self.right[node[active]])

    def to_dict(self, node: int = 0) -> Dict[str, Any]:
        """Nested node objects rooted at `node`."""
        if self.feature[node] < 0:
            return {"value": float(self.value[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_dict(int(self.left[node])),
            "right": self.to_dict(int(self.right[node])),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RegressionTree":
        feature: List[int] = []
        threshold: List[float] = []
        left: List[int] = []
        right: List[int] = []
        value: List[float] = []

        def visit(node: Dict[str, Any]) -> int:
            index = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if "value" in node:
                value[index] = float(node["value"])
                return index
            feature[index] = int(node["feature"])
            threshold[index] = float(node["threshold"])
            left[index] = visit(node["left"])
            right[index] = visit(node["right"])
            return index

        visit(data)
        return cls(np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
                   np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                   np.array(value, dtype=np.float64))


def best_split(X: np.ndarray, r: np.ndarray, min_samples_leaf: int) -> Optional[Tuple[float, int, float]]:
    """
    Highest variance-reduction split of one leaf.

    Gain = S_L^2/n_L + S_R^2/n_R - S^2/n over every feature and every midpoint
    between consecutive distinct values. Equal gains resolve to the lowest
    feature, then the lowest threshold.

    Returns:
        (gain, feature, threshold), or None when no split has positive gain
    """
    n, p = X.shape
    if n < 2 * min_samples_leaf:
        return None
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    cum = np.cumsum(r[order], axis=0)[:-1]                  # (n-1, p) left sums
    total = float(r.sum())
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    gain = cum ** 2 / n_left + (total - cum) ** 2 / n_right - total ** 2 / n

    valid = xs[1:] > xs[:-1]
    valid &= (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    best = float(gain.max())
    floor = GAIN_TOL * max(float(np.sum(r * r)), np.finfo(np.float64).tiny)
    if best <= floor:
        return None

    ties = gain >= best - 1e-12 * max(abs(best), 1.0)
    feature = int(np.argmax(ties.any(axis=0)))
    row = int(np.argmax(ties[:, feature]))
    threshold = float((xs[row, feature] + xs[row + 1, feature]) / 2.0)
    return float(gain[row, feature]), feature, threshold


def fit_tree(X: np.ndarray, r: np.ndarray, max_leaves: int, min_samples_leaf: int = 1) -> RegressionTree:
    """
    Grow one tree on residuals r, always splitting the leaf with the largest
    gain, until max_leaves leaves exist or no leaf has an admissible split.
    Leaf values are residual means (unscaled).
    """
    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    members = {0: np.arange(X.shape[0])}
    candidates: Dict[int, Tuple[float, int, float]] = {}

    def consider(node: int) -> None:
        idx = members[node]
        split = best_split(X[idx], r[idx], min_samples_leaf)
        if split is not None:
            candidates[node] = split

    consider(0)
    leaves = 1
    while leaves < max_leaves and candidates:
        # Largest gain first; equal gains go to the earliest created leaf
        node = max(candidates, key=lambda k: (candidates[k][0], -k))
        _, feat, thr = candidates.pop(node)
        idx = members.pop(node)
        mask = X[idx, feat] <= thr
        for child_rows in (idx[mask], idx[~mask]):
            child = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            members[child] = child_rows
        feature[node], threshold[node] = feat, thr
        left[node], right[node] = len(feature) - 2, len(feature) - 1
        consider(left[node])
        consider(right[node])
        leaves += 1

    value = np.zeros(len(feature))
    for node, idx in members.items():
        value[node] = float(r[idx].mean())
    return RegressionTree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
                          np.array(left, dtype=np.int64), np.array(right, dtype=np.int64), value)
