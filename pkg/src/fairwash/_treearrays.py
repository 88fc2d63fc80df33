"""Flat-array binary tree shared by explainer trees and tree ensembles.

Node ``i`` is a leaf iff ``feature[i] == -1``. Rows with
``x[feature] <= threshold`` go left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class TreeArrays:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        for name, dt in (("feature", np.int64), ("threshold", np.float64), ("left", np.int64),
                         ("right", np.int64), ("value", np.float64)):
            a = np.ascontiguousarray(getattr(self, name), dtype=dt)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            active = f >= 0
            if not active.any():
                return node
            r, n, fa = rows[active], node[active], f[active]
            go_left = X[r, fa] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeArrays":
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])

    @classmethod
    def leaf(cls, value: float) -> "TreeArrays":
        return cls([-1], [0.0], [-1], [-1], [value])
