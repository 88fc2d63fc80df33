from __future__ import annotations

import numpy as np

from ..errors import SchemaMismatch

VERSION = 1


def as_features(data, n_features: int, fingerprint: str = "") -> np.ndarray:
    """Accept a Dataset or a matrix; verify the column layout."""
    if hasattr(data, "features") and hasattr(data, "feature_names"):
        if fingerprint and data.fingerprint != fingerprint:
            raise SchemaMismatch("dataset schema fingerprint does not match the model")
        X = data.features
    else:
        X = np.asarray(data, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise SchemaMismatch(f"expected {n_features} feature columns, got {X.shape[-1]}")
    return X
