"""Constrained training of explainers by the exponentiated-gradient reduction.

The learner and the constraint are both linear in the 0/1 prediction
vector ``h`` of a base model on the training rows:

    objective(h) = (o . h + c) / n        constraints: R h <= b

so every Lagrangian best response is a weighted binary classification
problem. The same machinery serves the fairness-constrained attack (minimize
disagreement with the black box subject to bounded unfairness) and the
Rashomon range (minimize a signed disparity subject to bounded disagreement).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from ._treearrays import TreeArrays
from .errors import DidNotConverge
from .explainers import (LogisticConfig, RandomizedClassifier, TreeModel, fit_logistic,
                         fit_tree)
from .metrics import FairnessMetricId, unfairness

EG_FAMILIES = ("logistic", "tree")


@dataclass(frozen=True)
class EGParams:
    T: int = 50
    B: float = 100.0
    eta: float | None = None  # None: sqrt(log(rows) / T)
    tol: float | None = None  # None: 1 / sqrt(n)
    max_depth: int = 5
    logistic: LogisticConfig = LogisticConfig()


def _event_masks(metric: FairnessMetricId, labels):
    y = np.asarray(labels).astype(bool)
    return {
        FairnessMetricId.SP: [np.ones_like(y)],
        FairnessMetricId.PE: [~y],
        FairnessMetricId.EOPP: [y],
        FairnessMetricId.EODDS: [~y, y],
    }[metric]


def disparity_coefficients(metric, labels, groups):
    """One vector ``c`` per conditioning event with ``c . h`` = group-0 rate minus group-1 rate.

    An empty conditioning cell yields a zero vector (the gap is undefined and
    treated as 0, as in :mod:`fairwash.metrics`).
    """
    metric = FairnessMetricId.parse(metric)
    g = np.asarray(groups).astype(np.int8)
    out = []
    for ev in _event_masks(metric, labels):
        m0, m1 = ev & (g == 0), ev & (g == 1)
        n0, n1 = m0.sum(), m1.sum()
        c = np.zeros(len(g))
        if n0 and n1:
            c[m0] = 1.0 / n0
            c[m1] = -1.0 / n1
        out.append(c)
    return out


@dataclass(frozen=True, eq=False)
class MomentConstraint:
    """``|gap_e(h)| <= epsilon`` for each event, as ``+c_e h <= eps`` and ``-c_e h <= eps``."""

    metric: FairnessMetricId
    epsilon: float
    labels: np.ndarray = field(repr=False)
    groups: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "metric", FairnessMetricId.parse(self.metric))
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError("epsilon must be finite and non-negative")
        object.__setattr__(self, "labels", np.asarray(self.labels).astype(np.int8))
        object.__setattr__(self, "groups", np.asarray(self.groups).astype(np.int8))

    @property
    def rows(self) -> np.ndarray:
        cs = disparity_coefficients(self.metric, self.labels, self.groups)
        return np.array([s * c for c in cs for s in (1.0, -1.0)])

    @property
    def bounds(self) -> np.ndarray:
        return np.full(len(self.rows), float(self.epsilon))

    def unfairness(self, preds) -> float:
        return unfairness(preds, self.labels, self.groups, self.metric)


@dataclass(eq=False)
class ConstrainedResult:
    iterates: list
    predictions: np.ndarray  # iterates x rows
    weights: np.ndarray  # mixture weights over iterates
    objectives: np.ndarray
    violations: np.ndarray  # max_k (R h - b)_k per iterate
    gap: float
    tol: float
    lambdas: np.ndarray = field(repr=False, default=None)

    @property
    def converged(self) -> bool:
        return self.gap <= self.tol

    @property
    def mixture(self) -> RandomizedClassifier:
        keep = np.nonzero(self.weights > 0)[0]
        w = self.weights[keep] / self.weights[keep].sum()
        return RandomizedClassifier([self.iterates[i] for i in keep], w)

    def to_dict(self, refs=None) -> dict:
        return {
            "iterates": list(refs) if refs is not None else [m.to_dict() for m in self.iterates],
            "weights": self.weights.tolist(),
            "objectives": self.objectives.tolist(),
            "violations": self.violations.tolist(),
            "gap": self.gap,
            "tol": self.tol,
            "converged": self.converged,
        }


def _fit_weighted(family, X, target, weight, params: EGParams, fingerprint=""):
    if family == "logistic":
        return fit_logistic(X, target, weight, params.logistic, fingerprint)
    if family == "tree":
        return fit_tree(X, target, weight, params.max_depth, fingerprint)
    raise ValueError(f"exponentiated gradient supports {EG_FAMILIES}, not {family!r}")


def _cost_sensitive_fit(family, X, cost, params, fingerprint=""):
    """Minimize ``sum_i cost_i h_i`` by weighted classification.

    Negative cost favours predicting 1: target 1 with weight ``|cost|``.
    """
    target = (cost < 0).astype(np.int8)
    weight = np.abs(cost)
    if not weight.sum() > 0:
        weight = np.ones(len(cost))
    return _fit_weighted(family, X, target, weight, params, fingerprint)


class _Problem:
    """Linear objective and constraints over prediction vectors on ``X``."""

    def __init__(self, X, obj_counts, obj_const, rows, bounds, family, params, fingerprint,
                 paired=False):
        self.paired = paired  # rows come in +/- pairs, so lambda starts effectively at 0
        self.X = X
        self.n = X.shape[0]
        self.obj_counts = np.asarray(obj_counts, dtype=np.float64)
        self.obj_const = float(obj_const)
        self.rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        self.bounds = np.asarray(bounds, dtype=np.float64)
        self.family = family
        self.params = params
        self.fingerprint = fingerprint

    def objective(self, h):
        return (float(self.obj_counts @ h) + self.obj_const) / self.n

    def gammas(self, h):
        return self.rows @ h

    def best_response(self, lam):
        cost = self.obj_counts + self.n * (np.asarray(lam) @ self.rows)
        model = _cost_sensitive_fit(self.family, self.X, cost, self.params, self.fingerprint)
        return model, model.predict(self.X).astype(np.float64)

    def lagrangian(self, obj, gam, lam):
        return obj + float(lam @ (gam - self.bounds))


def _solve_lp(objs, gams, bounds, B):
    """Best mixture over found models: min obj.q + B s  s.t.  G q - s <= b, sum q = 1."""
    J, K = len(objs), len(bounds)
    c = np.concatenate([objs, [B]])
    A_ub = np.hstack([gams.T, -np.ones((K, 1))])
    A_eq = np.concatenate([np.ones(J), [0.0]])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=bounds, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (J + 1), method="highs")
    if res.status != 0:
        q = np.zeros(J)
        q[int(np.argmin(objs))] = 1.0
        return q, np.zeros(K)
    q = np.clip(res.x[:J], 0.0, None)
    q /= q.sum()
    lam = np.clip(-res.ineqlin.marginals, 0.0, None)
    return q, lam


def _run(problem: _Problem, params: EGParams):
    K = len(problem.bounds)
    T = int(params.T)
    if T < 1:
        raise ValueError("T must be >= 1")
    B = float(params.B)
    eta = params.eta if params.eta is not None else math.sqrt(math.log(max(K, 2)) / T)
    tol = params.tol if params.tol is not None else 1.0 / math.sqrt(problem.n)

    models, preds, objs, gams = [], [], [], []
    keys = {}

    def add(model, h):
        key = h.astype(np.int8).tobytes()
        if key in keys:
            return keys[key]
        keys[key] = len(models)
        models.append(model)
        preds.append(h)
        objs.append(problem.objective(h))
        gams.append(problem.gammas(h))
        return keys[key]

    theta = np.zeros(K)
    lam_hist = []
    prev_v = None
    for t in range(T):
        lam = B * np.exp(theta) / (1.0 + np.exp(theta).sum())
        lam_hist.append(lam)
        model, h = problem.best_response(lam)
        idx = add(model, h)
        if t == 0 and problem.paired and np.all(gams[idx] <= problem.bounds + 1e-12):
            # unconstrained optimum is feasible: (h, lambda=0) is a saddle point
            weights = np.zeros(len(models))
            weights[idx] = 1.0
            return _result(models, preds, objs, gams, problem, weights, 0.0, tol, lam_hist)
        v = gams[idx] - problem.bounds
        if prev_v is not None and float(v @ prev_v) < 0:
            # the response jumped across the constraint boundary: shrink the step
            eta *= 0.5
        prev_v = v
        theta = theta + eta * v

    O, G = np.array(objs), np.array(gams)
    q, lam_lp = _solve_lp(O, G, problem.bounds, B)
    # duality gap of the LP mixture, with one oracle call at its multipliers
    obj_q, gam_q = float(q @ O), q @ G
    L = problem.lagrangian(obj_q, gam_q, lam_lp)
    L_high = obj_q + B * max(0.0, float(np.max(gam_q - problem.bounds)))
    model, h = problem.best_response(lam_lp)
    idx = add(model, h)
    L_low = problem.lagrangian(objs[idx], gams[idx], lam_lp)
    gap = max(L_high - L, L - L_low)
    weights = np.zeros(len(models))
    weights[: len(q)] = q
    return _result(models, preds, objs, gams, problem, weights, gap, tol, lam_hist)


def _result(models, preds, objs, gams, problem, weights, gap, tol, lam_hist):
    G = np.array(gams)
    return ConstrainedResult(
        iterates=list(models),
        predictions=np.array(preds, dtype=np.int8),
        weights=np.asarray(weights, dtype=np.float64),
        objectives=np.array(objs),
        violations=np.max(G - problem.bounds, axis=1),
        gap=float(gap),
        tol=float(tol),
        lambdas=np.array(lam_hist),
    )


def zero_one_objective(targets):
    """Count-unit coefficients of the disagreement rate with ``targets``."""
    y = np.asarray(targets, dtype=np.float64)
    return 1.0 - 2.0 * y, float(y.sum())


def exponentiated_gradient(family: str, X, targets, constraint: MomentConstraint,
                           params: EGParams = EGParams(), fingerprint: str = "") -> ConstrainedResult:
    """Minimize disagreement with ``targets`` subject to ``constraint``.

    ``targets`` are the black-box labels on the suing group. Returns every
    distinct best response, the LP-optimal mixture over them and a duality-gap
    estimate; ``result.converged`` is False when the gap exceeds the tolerance.
    """
    X = np.asarray(X, dtype=np.float64)
    targets = np.asarray(targets)
    if X.shape[0] != len(targets) or X.shape[0] == 0:
        raise ValueError("X and targets must align and be non-empty")
    o, c = zero_one_objective(targets)
    problem = _Problem(X, o, c, constraint.rows, constraint.bounds, family, params, fingerprint,
                       paired=True)
    result = _run(problem, params)
    if not result.converged:
        warnings.warn(f"duality gap {result.gap:.4g} above tolerance {result.tol:.4g}",
                      DidNotConverge, stacklevel=2)
    return result


def best_response(lam, X, targets, constraint: MomentConstraint, family: str,
                  params: EGParams = EGParams(), fingerprint: str = ""):
    """Base model minimizing the Lagrangian at multipliers ``lam``."""
    lam = np.asarray(lam, dtype=np.float64)
    if (lam < 0).any():
        raise ValueError("multipliers must be non-negative")
    o, c = zero_one_objective(targets)
    problem = _Problem(np.asarray(X, dtype=np.float64), o, c, constraint.rows,
                       constraint.bounds, family, params, fingerprint)
    return problem.best_response(lam)[0]


@dataclass(frozen=True)
class Pick:
    model: object
    index: int | None  # None: not one of the iterates
    deterministic: bool
    relabeled: bool = False


def relabel_tree_leaves(model: TreeModel, X, targets, constraint: MomentConstraint) -> TreeModel:
    """Keep the tree's partition and choose leaf labels by a small MILP.

    Minimizes disagreement with ``targets`` subject to the constraint rows.
    All-zero labels are always feasible, so a tree is always returned.
    """
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    tree = model.tree
    leaves = np.nonzero(tree.feature < 0)[0]
    pos = {leaf: k for k, leaf in enumerate(leaves)}
    member = np.array([pos[i] for i in tree.apply(X)])
    L = len(leaves)
    # cost of label 1 minus cost of label 0, per leaf
    c = np.bincount(member, weights=1.0 - 2.0 * t, minlength=L)
    A = np.array([np.bincount(member, weights=row, minlength=L) for row in constraint.rows])
    res = milp(c, constraints=LinearConstraint(A, -np.inf, constraint.bounds),
               integrality=np.ones(L), bounds=Bounds(0, 1))
    z = np.zeros(L) if res.x is None else np.round(res.x)
    value = tree.value.copy()
    value[leaves] = z
    new = TreeArrays(tree.feature, tree.threshold, tree.left, tree.right, value)
    return TreeModel(new, model.max_depth, model.n_features, model.fingerprint)


def pick_deterministic(result: ConstrainedResult, targets, constraint: MomentConstraint,
                       slack: float = 0.01, X=None) -> Pick:
    """Lowest-loss single iterate with unfairness <= epsilon + slack.

    When no iterate qualifies and ``X`` is given, tree iterates are relabeled
    leaf-wise to satisfy the constraint and the best of those is returned.
    Otherwise the mixture comes back, flagged non-deterministic.
    """
    t = np.asarray(targets)

    def best_of(preds):
        best, best_loss = None, np.inf
        for i, h in enumerate(preds):
            if constraint.unfairness(h) > constraint.epsilon + slack:
                continue
            loss = float(np.mean(h != t))
            if loss < best_loss:
                best, best_loss = i, loss
        return best

    best = best_of(result.predictions)
    if best is not None:
        return Pick(result.iterates[best], best, True)
    if X is not None:
        repaired = [relabel_tree_leaves(m, X, t, constraint)
                    for m in result.iterates if isinstance(m, TreeModel)]
        k = best_of([m.predict(X) for m in repaired])
        if k is not None:
            return Pick(repaired[k], None, True, relabeled=True)
    return Pick(result.mixture, None, False)
