"""Rule mining and rule lists learned by best-first branch-and-bound.

The objective is weighted misclassification (normalized by total weight)
plus ``reg`` per rule. An optional group-fairness constraint is enforced on
the full list; prefixes are pruned when no completion can satisfy it.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyRuleSet, Infeasible
from ..metrics import FairnessMetricId, unfairness
from ._common import VERSION, as_features
from ._weights import check_weighted


@dataclass(frozen=True, order=True)
class Rule:
    """Conjunction of ``column == 1`` literals."""

    literals: tuple[int, ...]

    def covers(self, X: np.ndarray) -> np.ndarray:
        m = np.ones(X.shape[0], dtype=bool)
        for j in self.literals:
            m &= X[:, j] == 1
        return m

    def render(self, names=None) -> str:
        parts = [f"({names[j]})" if names else f"(x{j})" for j in self.literals]
        return " and ".join(parts)


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    supports: tuple[float, ...] = ()

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __getitem__(self, i):
        return self.rules[i]


def _binary_columns(X):
    return [j for j in range(X.shape[1]) if np.isin(X[:, j], (0.0, 1.0)).all()]


def mine_rules(data, max_len: int = 2, min_support: float = 0.05) -> RuleSet:
    """All conjunctions of up to ``max_len`` positive literals with enough support.

    Only 0/1 columns take part; output is lexicographic in column indices.
    """
    X = np.asarray(getattr(data, "features", data), dtype=np.float64)
    n = X.shape[0]
    cols = _binary_columns(X)
    rules, supports = [], []
    for k in range(1, max_len + 1):
        for lits in itertools.combinations(cols, k):
            r = Rule(tuple(lits))
            cov = r.covers(X)
            s = cov.sum() / n
            if s < min_support - 1e-12 or cov.sum() == 0:
                continue
            rules.append(r)
            supports.append(float(s))
    if not rules:
        raise EmptyRuleSet("no rule reaches the minimum support")
    order = sorted(range(len(rules)), key=lambda i: rules[i].literals)
    return RuleSet(tuple(rules[i] for i in order), tuple(supports[i] for i in order))


@dataclass(frozen=True, eq=False)
class RuleList:
    rules: tuple[tuple[Rule, int], ...]
    default: int
    n_features: int
    feature_names: tuple[str, ...] = ()
    fingerprint: str = ""
    objective: float = float("nan")
    certified: bool = False

    def __len__(self):
        return len(self.rules)

    def predict(self, data) -> np.ndarray:
        X = as_features(data, self.n_features, self.fingerprint)
        out = np.full(X.shape[0], self.default, dtype=np.int8)
        for rule, pred in reversed(self.rules):
            out[rule.covers(X)] = pred
        return out

    def render(self) -> str:
        names = self.feature_names or None
        if not self.rules:
            return f"predict {self.default}"
        parts = []
        for i, (rule, pred) in enumerate(self.rules):
            kw = "if" if i == 0 else "else if"
            parts.append(f"{kw} {rule.render(names)} then {pred}")
        parts.append(f"else {self.default}")
        return " ".join(parts)

    def to_dict(self) -> dict:
        return {"version": VERSION, "kind": "rulelist",
                "rules": [{"literals": list(r.literals), "prediction": int(p)}
                          for r, p in self.rules],
                "default": int(self.default), "n_features": self.n_features,
                "feature_names": list(self.feature_names), "fingerprint": self.fingerprint,
                "objective": self.objective, "certified": self.certified,
                "text": self.render()}

    @classmethod
    def from_dict(cls, d: dict) -> "RuleList":
        rules = tuple((Rule(tuple(r["literals"])), int(r["prediction"])) for r in d["rules"])
        return cls(rules, int(d["default"]), d["n_features"], tuple(d.get("feature_names", ())),
                   d.get("fingerprint", ""), d.get("objective", float("nan")),
                   d.get("certified", False))


@dataclass(frozen=True)
class RuleConstraint:
    metric: FairnessMetricId
    epsilon: float
    labels: np.ndarray = field(repr=False)
    groups: np.ndarray = field(repr=False)


class _FairnessBound:
    """Lower bound on the unfairness reachable from a partially fixed prediction vector.

    Rows not yet captured are treated as individually free, which relaxes the
    real completions (one prediction per later rule plus a default).
    """

    def __init__(self, metric, labels, groups):
        metric = FairnessMetricId.parse(metric)
        y = np.asarray(labels).astype(bool)
        g = np.asarray(groups).astype(np.int8)
        events = {
            FairnessMetricId.SP: [np.ones_like(y)],
            FairnessMetricId.PE: [~y],
            FairnessMetricId.EOPP: [y],
            FairnessMetricId.EODDS: [~y, y],
        }[metric]
        self.cells = []
        for ev in events:
            m0, m1 = ev & (g == 0), ev & (g == 1)
            self.cells.append((m0, m1, int(m0.sum()), int(m1.sum())))

    def lower_bound(self, fixed_pos, captured):
        """``fixed_pos``: captured rows predicted 1; ``captured``: rows with a fixed prediction."""
        lb = 0.0
        for m0, m1, n0, n1 in self.cells:
            if n0 == 0 or n1 == 0:
                continue
            a0 = int((fixed_pos & m0).sum())
            a1 = int((fixed_pos & m1).sum())
            b0 = a0 + int((~captured & m0).sum())
            b1 = a1 + int((~captured & m1).sum())
            # distance between [a0/n0, b0/n0] and [a1/n1, b1/n1]
            gap = max(0, a0 * n1 - b1 * n0, a1 * n0 - b0 * n1) / (n0 * n1)
            lb = max(lb, gap)
        return lb


def fit_rulelist(X, target, rules: RuleSet, weight=None, max_rules: int = 5,
                 constraint: RuleConstraint | None = None, reg: float = 0.005,
                 max_nodes: int = 20000, feature_names=(), fingerprint: str = "") -> RuleList:
    """Best-first branch-and-bound over rule prefixes of length <= ``max_rules``.

    Each rule in the list and the default carry their own 0/1 prediction.
    Returns the best feasible list found; ``certified`` is True when the
    search space was exhausted within ``max_nodes`` expansions.
    """
    if len(rules) == 0:
        raise EmptyRuleSet("rule set is empty")
    X, t, w = check_weighted(X, target, weight)
    W = float(w.sum())
    wn = w / W
    n = len(t)
    cover = np.array([r.covers(X) for r in rules.rules])  # rules x rows

    # equivalence classes: rows identical on every rule's coverage must share a prediction
    _, cls_of = np.unique(cover.T, axis=0, return_inverse=True)
    cls_of = cls_of.ravel()
    n_cls = int(cls_of.max()) + 1
    cls_w1 = np.bincount(cls_of, weights=wn * t, minlength=n_cls)
    cls_w0 = np.bincount(cls_of, weights=wn * (1 - t), minlength=n_cls)
    cls_minority = np.minimum(cls_w1, cls_w0)
    err_if = {1: wn * (1 - t), 0: wn * t}

    fair = None
    if constraint is not None and constraint.epsilon < 1.0:
        fair = _FairnessBound(constraint.metric, constraint.labels, constraint.groups)
        if len(constraint.labels) != n:
            raise ValueError("constraint tuple must align with the samples")
        eps = float(constraint.epsilon)

    def feasible(pred):
        if fair is None:
            return True
        return unfairness(pred, constraint.labels, constraint.groups, constraint.metric) <= eps + 1e-12

    best_obj, best = np.inf, None
    counter = itertools.count()

    def consider(prefix, captured, pred_vec, err):
        nonlocal best_obj, best
        for default in (0, 1):
            rest = ~captured
            obj = err + float(err_if[default][rest].sum()) + reg * len(prefix)
            if obj < best_obj - 1e-12:
                full = pred_vec.copy()
                full[rest] = default
                if feasible(full):
                    best_obj, best = obj, (prefix, default)

    root_captured = np.zeros(n, dtype=bool)
    root_pred = np.zeros(n, dtype=np.int8)
    consider((), root_captured, root_pred, 0.0)
    heap = [(0.0, next(counter), (), root_captured, root_pred, 0.0)]
    expanded = 0
    exhausted = True
    while heap:
        lb, _, prefix, captured, pred_vec, err = heapq.heappop(heap)
        if lb >= best_obj - 1e-12:
            continue
        if len(prefix) >= max_rules:
            continue
        if expanded >= max_nodes:
            exhausted = False
            break
        expanded += 1
        used = {i for i, _ in prefix}
        for i in range(len(rules)):
            if i in used:
                continue
            new = cover[i] & ~captured
            if not new.any():
                continue
            cap = captured | new
            uncaptured_cls = np.ones(n_cls, dtype=bool)
            uncaptured_cls[cls_of[cap]] = False
            floor = float(cls_minority[uncaptured_cls].sum())
            for p in (1, 0):
                e = err + float(err_if[p][new].sum())
                child_lb = e + floor + reg * (len(prefix) + 1)
                if child_lb >= best_obj - 1e-12:
                    continue
                pv = pred_vec.copy()
                pv[new] = p
                if fair is not None and fair.lower_bound(pv.astype(bool), cap) > eps + 1e-12:
                    continue
                child = prefix + ((i, p),)
                consider(child, cap, pv, e)
                if len(child) < max_rules:
                    heapq.heappush(heap, (child_lb, next(counter), child, cap, pv, e))
    if best is None:
        raise Infeasible("no rule list satisfies the fairness constraint")
    prefix, default = best
    return RuleList(tuple((rules[i], p) for i, p in prefix), default, X.shape[1],
                    tuple(feature_names), fingerprint, float(best_obj), exhausted)


def rulelist_objective(model: RuleList, X, target, weight=None, reg: float = 0.005) -> float:
    X, t, w = check_weighted(X, target, weight)
    wrong = model.predict(X) != t
    return float(w[wrong].sum() / w.sum()) + reg * len(model)
