from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import VERSION


@dataclass(frozen=True, eq=False)
class RandomizedClassifier:
    """Weighted mixture of base explainers.

    ``predict`` is the deterministic weighted-majority vote (ties predict 1);
    ``predict_proba`` is the mixture's probability of predicting 1.
    """

    members: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if len(w) != len(self.members) or len(w) == 0:
            raise ValueError("one weight per member required")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "members", tuple(self.members))

    @property
    def n_features(self) -> int:
        return self.members[0].n_features

    def predict_proba(self, data) -> np.ndarray:
        votes = np.array([m.predict(data) for m in self.members], dtype=np.float64)
        return self.weights @ votes

    def predict(self, data) -> np.ndarray:
        return (self.predict_proba(data) >= 0.5 - 1e-12).astype(np.int8)

    def to_dict(self) -> dict:
        return {"version": VERSION, "kind": "mixture",
                "members": [m.to_dict() for m in self.members],
                "weights": self.weights.tolist()}
