from __future__ import annotations

import numpy as np


def check_weighted(X, target, weight):
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(target).astype(np.int8)
    w = np.ones(len(t)) if weight is None else np.asarray(weight, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(t) or len(w) != len(t):
        raise ValueError("features, target and weight must have matching rows")
    if not np.isfinite(w).all() or (w < 0).any():
        raise ValueError("weights must be finite and non-negative")
    if not w.sum() > 0:
        raise ValueError("total weight must be positive")
    if not np.isin(t, (0, 1)).all():
        raise ValueError("target must be binary")
    return X, t, w


def compress(X, target, weight):
    """Merge identical (row, target) pairs, summing their weights.

    Makes integer weight ``k`` and ``k`` duplicated rows produce the same
    fitting problem bit for bit, and shrinks one-hot data considerably.
    """
    keep = weight > 0
    X, target, weight = X[keep], target[keep], weight[keep]
    key = np.column_stack([X, target.astype(np.float64)])
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    w = np.bincount(inv.ravel(), weights=weight, minlength=len(uniq))
    return uniq[:, :-1].copy(), uniq[:, -1].astype(np.int8), w
