from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._treearrays import TreeArrays
from ._common import VERSION, as_features
from ._weights import check_weighted, compress

_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TreeModel:
    tree: TreeArrays
    max_depth: int
    n_features: int
    fingerprint: str = ""

    def predict(self, data) -> np.ndarray:
        X = as_features(data, self.n_features, self.fingerprint)
        return self.tree.predict_value(X).astype(np.int8)

    def depth(self) -> int:
        return self.tree.depth()

    def to_dict(self) -> dict:
        return {"version": VERSION, "kind": "tree", "tree": self.tree.to_dict(),
                "max_depth": self.max_depth, "n_features": self.n_features,
                "fingerprint": self.fingerprint}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(TreeArrays.from_dict(d["tree"]), d["max_depth"], d["n_features"],
                   d.get("fingerprint", ""))


def _gini(w1, w):
    # weighted Gini impurity mass: w * (1 - p^2 - (1-p)^2)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2.0 * w1 * (w - w1) / w
    return np.where(w > 0, out, 0.0)


def _best_split(X, t, w):
    """Highest-gain (feature, threshold); ties go to the lower feature, then threshold."""
    W, W1 = w.sum(), w @ t
    parent = float(_gini(np.array(W1), np.array(W)))
    best = None
    best_gain = -np.inf
    for j in range(X.shape[1]):
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        cw = np.cumsum(w[order])
        cw1 = np.cumsum((w * t)[order])
        cut = np.nonzero(xs[1:] > xs[:-1])[0]
        if cut.size == 0:
            continue
        lw, lw1 = cw[cut], cw1[cut]
        gain = parent - _gini(lw1, lw) - _gini(W1 - lw1, W - lw)
        k = int(np.argmax(gain))
        if gain[k] > best_gain + _TOL:
            best_gain = float(gain[k])
            best = (j, 0.5 * (xs[cut[k]] + xs[cut[k] + 1]))
    return best


def fit_tree(X, target, weight=None, max_depth: int = 3, fingerprint: str = "") -> TreeModel:
    """Greedy weighted-Gini CART with midpoint thresholds.

    An impure node is split whenever a non-trivial split exists, even at
    zero gain (needed for XOR-like targets); sibling leaves with the same
    prediction are merged afterwards.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    X, t, w = check_weighted(X, target, weight)
    d = X.shape[1]
    Xc, tc, wc = compress(X, t, w)
    tf = tc.astype(np.float64)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        for lst, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (value, 0.0)):
            lst.append(v)
        return len(feature) - 1

    def grow(idx, depth):
        node = new_node()
        ww, tt = wc[idx], tf[idx]
        W, W1 = ww.sum(), ww @ tt
        value[node] = 1.0 if W1 >= W - W1 else 0.0
        if depth >= max_depth or W1 <= 0 or W1 >= W:
            return node
        split = _best_split(Xc[idx], tt, ww)
        if split is None:
            return node
        j, thr = split
        go_left = Xc[idx, j] <= thr
        l = grow(idx[go_left], depth + 1)
        r = grow(idx[~go_left], depth + 1)
        if feature[l] < 0 and feature[r] < 0 and value[l] == value[r]:
            # both children predict the same: collapse back into a leaf
            del feature[l:], threshold[l:], left[l:], right[l:], value[l:]
            return node
        feature[node], threshold[node], left[node], right[node] = j, float(thr), l, r
        return node

    grow(np.arange(len(Xc)), 0)
    return TreeModel(TreeArrays(feature, threshold, left, right, value), max_depth, d,
                     fingerprint)
