"""The global fairwashing attack and its fidelity-unfairness Pareto front.

An attack fits an interpretable explainer to the black-box decisions on the
suing group while keeping the explainer's own unfairness below a bound;
sweeping the bound traces the achievable trade-offs.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .blackbox import BlackBoxModel
from .dataspace import Dataset
from .errors import DidNotConverge, FairwashError, Infeasible, SchemaMismatch
from .explainers import RuleConstraint, fit_rulelist, mine_rules
from .fairtrain import EGParams, MomentConstraint, exponentiated_gradient, pick_deterministic
from .metrics import FairnessMetricId, accuracy, fidelity, unfairness

ATTACK_FAMILIES = ("logistic", "tree", "rulelist")


@dataclass(frozen=True, eq=False)
class SuingInstance:
    features: np.ndarray
    bb_labels: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    blackbox_id: str = ""
    split_id: str = ""
    fingerprint: str = ""
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.features)
        if not (len(self.bb_labels) == len(self.labels) == len(self.groups) == n):
            raise ValueError("suing-group vectors must have equal length")

    def __len__(self):
        return len(self.features)


def make_suing_instance(b: BlackBoxModel, suing: Dataset, split_id: str = "") -> SuingInstance:
    """Freeze the black-box decisions on the suing group next to its true labels and groups."""
    if suing.fingerprint != b.fingerprint:
        raise SchemaMismatch("suing group schema does not match the black-box")
    return SuingInstance(suing.features, b.predict(suing), suing.labels, suing.groups,
                         b.model_id, split_id, suing.fingerprint, suing.feature_names)


@dataclass(frozen=True)
class AttackConfig:
    eg: EGParams = EGParams()
    max_rules: int = 5
    rule_max_len: int = 2
    rule_min_support: float = 0.05
    rule_reg: float = 0.005
    rule_max_nodes: int = 3000
    slack: float = 0.01


@dataclass(frozen=True, eq=False)
class TradeoffPoint:
    epsilon: float
    fidelity: float
    unfairness: float
    accuracy: float
    explainer: object = field(repr=False, default=None)
    eval_id: str = "suing"
    flags: tuple[str, ...] = ()


def fairwash(instance: SuingInstance, family: str, metric, epsilon: float,
             config: AttackConfig = AttackConfig()) -> TradeoffPoint:
    """Fit one explainer under ``unfairness <= epsilon`` and measure it on the suing group.

    Raises :class:`Infeasible` when a rule list cannot meet the bound.
    """
    metric = FairnessMetricId.parse(metric)
    X, yb = instance.features, instance.bb_labels
    flags = []
    if family in ("logistic", "tree"):
        constraint = MomentConstraint(metric, epsilon, instance.labels, instance.groups)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DidNotConverge)  # reported as a flag instead
            result = exponentiated_gradient(family, X, yb, constraint, config.eg,
                                            instance.fingerprint)
        pick = pick_deterministic(result, yb, constraint, config.slack, X=X)
        model = pick.model
        if not result.converged:
            flags.append("not_converged")
        if not pick.deterministic:
            flags.append("randomized")
        if pick.relabeled:
            flags.append("relabeled")
    elif family == "rulelist":
        rules = mine_rules(X, config.rule_max_len, config.rule_min_support)
        rc = None
        if epsilon < 1.0:
            rc = RuleConstraint(metric, float(epsilon), instance.labels, instance.groups)
        model = fit_rulelist(X, yb, rules, max_rules=config.max_rules, constraint=rc,
                             reg=config.rule_reg, max_nodes=config.rule_max_nodes,
                             feature_names=instance.feature_names,
                             fingerprint=instance.fingerprint)
        if not model.certified:
            flags.append("uncertified")
    else:
        raise ValueError(f"unknown explainer family {family!r}")
    preds = model.predict(X)
    return TradeoffPoint(
        epsilon=float(epsilon),
        fidelity=fidelity(preds, yb),
        unfairness=unfairness(preds, instance.labels, instance.groups, metric),
        accuracy=accuracy(preds, instance.labels),
        explainer=model,
        eval_id="suing",
        flags=tuple(flags),
    )


class EpsilonGrid(tuple):
    """Strictly increasing unfairness bounds in [0, 1]."""

    def __new__(cls, values):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ValueError("epsilon grid must be non-empty")
        if any(v < 0 or v > 1 for v in vals):
            raise ValueError("epsilon values must lie in [0, 1]")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("epsilon grid must be strictly increasing")
        return super().__new__(cls, vals)

    @classmethod
    def uniform(cls, n: int = 300) -> "EpsilonGrid":
        return cls(np.linspace(0.0, 1.0, n))


def dominates(q: TradeoffPoint, p: TradeoffPoint) -> bool:
    return (q.unfairness <= p.unfairness and q.fidelity >= p.fidelity
            and (q.unfairness < p.unfairness or q.fidelity > p.fidelity))


def nondominated(points) -> list:
    """Non-dominated subset (low unfairness, high fidelity), sorted by unfairness.

    Among exact duplicates the earliest point survives.
    """
    pts = list(points)
    order = sorted(range(len(pts)), key=lambda i: (pts[i].unfairness, -pts[i].fidelity, i))
    front, best_fid = [], -np.inf
    for i in order:
        if pts[i].fidelity > best_fid:
            front.append(pts[i])
            best_fid = pts[i].fidelity
    return front


@dataclass(frozen=True, eq=False)
class SweepRow:
    epsilon: float
    point: TradeoffPoint | None
    error: str = ""


@dataclass(frozen=True, eq=False)
class ParetoFront:
    points: tuple
    blackbox_unfairness: float
    rows: tuple = ()
    metric: str = ""
    family: str = ""

    def on_front(self, point) -> bool:
        return any(point is p for p in self.points)


def _sweep_task(args):
    instance, family, metric, eps, config = args
    try:
        return SweepRow(eps, fairwash(instance, family, metric, eps, config))
    except (Infeasible, FairwashError) as exc:
        return SweepRow(eps, None, type(exc).__name__)


def pareto_sweep(instance: SuingInstance, family: str, metric, grid=None,
                 config: AttackConfig = AttackConfig(), jobs: int = 1) -> ParetoFront:
    """One attack per bound in ``grid``, then the non-dominated subset.

    Failed bounds are kept as empty rows; only an all-failed sweep raises.
    """
    metric = FairnessMetricId.parse(metric)
    grid = EpsilonGrid.uniform() if grid is None else EpsilonGrid(grid)
    tasks = [(instance, family, metric, eps, config) for eps in grid]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    points = [r.point for r in rows if r.point is not None]
    if not points:
        raise Infeasible("every epsilon in the sweep failed")
    bb_unf = unfairness(instance.bb_labels, instance.labels, instance.groups, metric)
    return ParetoFront(tuple(nondominated(points)), bb_unf, tuple(rows), metric.value, family)


SWEEP_COLUMNS = ("epsilon", "fidelity_sg", "unfairness_sg", "accuracy_sg", "explainer_path",
                 "flags", "on_front")


def write_sweep_csv(front: ParetoFront, path, explainer_paths=None) -> None:
    explainer_paths = explainer_paths or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for i, row in enumerate(front.rows):
            p = row.point
            if p is None:
                w.writerow([repr(row.epsilon), "", "", "", "", row.error, "0"])
                continue
            w.writerow([repr(p.epsilon), repr(p.fidelity), repr(p.unfairness), repr(p.accuracy),
                        explainer_paths.get(i, ""), ";".join(p.flags),
                        "1" if front.on_front(p) else "0"])
