from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import NonFiniteLoss
from ._common import VERSION, as_features
from ._weights import check_weighted, compress


@dataclass(frozen=True)
class LogisticConfig:
    l2: float = 1e-4
    epochs: int = 500
    step_size: float | None = None  # None: 1 / smoothness constant
    seed: int = 0  # init is all zeros, kept for provenance only
    tol: float = 1e-9


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    bias: float
    config: LogisticConfig = LogisticConfig()
    fingerprint: str = ""

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if not (np.isfinite(w).all() and np.isfinite(self.bias)):
            raise NonFiniteLoss("non-finite logistic parameters")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def decision_function(self, data) -> np.ndarray:
        X = as_features(data, self.n_features, self.fingerprint)
        return X @ self.weights + self.bias

    def predict(self, data) -> np.ndarray:
        return (self.decision_function(data) >= 0).astype(np.int8)

    def to_dict(self) -> dict:
        return {"version": VERSION, "kind": "logistic", "weights": self.weights.tolist(),
                "bias": self.bias, "config": asdict(self.config),
                "fingerprint": self.fingerprint}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(np.array(d["weights"]), d["bias"], LogisticConfig(**d["config"]),
                   d.get("fingerprint", ""))


def _loss_grad(theta, Xa, t, w, W, l2):
    z = Xa @ theta
    # weighted mean of log(1 + e^z) - t z
    loss = float(w @ (np.logaddexp(0.0, z) - t * z)) / W + 0.5 * l2 * float(theta[:-1] @ theta[:-1])
    p = 0.5 * (1.0 + np.tanh(0.5 * z))
    grad = Xa.T @ (w * (p - t)) / W
    grad[:-1] += l2 * theta[:-1]
    return loss, grad


def logistic_loss(model: LogisticModel, X, target, weight=None) -> float:
    """Weighted mean cross-entropy (without the L2 term)."""
    X, t, w = check_weighted(X, target, weight)
    z = X @ model.weights + model.bias
    return float(w @ (np.logaddexp(0.0, z) - t * z)) / float(w.sum())


def fit_logistic(X, target, weight=None, config: LogisticConfig = LogisticConfig(),
                 fingerprint: str = "") -> LogisticModel:
    """Weighted L2-regularized logistic regression by accelerated full-batch gradient descent.

    Starts from zero parameters, so the result depends only on the data and
    ``config``.
    """
    X, t, w = check_weighted(X, target, weight)
    d = X.shape[1]
    Xc, tc, wc = compress(X, t, w)
    Xa = np.column_stack([Xc, np.ones(len(Xc))])
    tf = tc.astype(np.float64)
    W = float(wc.sum())
    if config.step_size is None:
        H = (Xa * wc[:, None]).T @ Xa / W
        smooth = 0.25 * float(np.linalg.eigvalsh(H)[-1]) + config.l2
        step = 1.0 / smooth
    else:
        step = float(config.step_size)
    theta = np.zeros(d + 1)
    momentum = theta.copy()
    k_prev = 1.0
    for _ in range(config.epochs):
        with np.errstate(over="ignore", invalid="ignore"):  # divergence is checked below
            loss, grad = _loss_grad(momentum, Xa, tf, wc, W, config.l2)
        if not np.isfinite(loss) or not np.isfinite(grad).all():
            raise NonFiniteLoss("logistic loss diverged; reduce step_size")
        new = momentum - step * grad
        k = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * k_prev * k_prev))
        momentum = new + ((k_prev - 1.0) / k) * (new - theta)
        done = float(np.abs(new - theta).max()) < config.tol
        theta, k_prev = new, k
        if done:
            break
    if not np.isfinite(theta).all():
        raise NonFiniteLoss("logistic parameters diverged")
    return LogisticModel(theta[:-1].copy(), float(theta[-1]), config, fingerprint)
