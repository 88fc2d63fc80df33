"""Range of signed disparity among explainers with bounded disagreement (Rashomon set).

For a loss bound ``v`` the extremes solve

    min / max  signed_disparity(e)   subject to   disagreement(e, b) <= v

with the same exponentiated-gradient reduction used by the attack, roles
swapped. The resulting interval measures how freely an explainer's
unfairness can be chosen at a given fidelity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleBound
from .explainers import LogisticModel, TreeModel, fit_logistic, fit_tree, logistic_loss
from .explainers.tree import TreeArrays
from .fairtrain import EGParams, _Problem, _run, disparity_coefficients
from .metrics import FairnessMetricId, signed_disparity, unfairness

RASHOMON_FAMILIES = ("logistic", "tree")

# A single loss row needs a smaller multiplier bound and a bolder step than
# the fairness attack: the loss bound is tight and the dual must move fast to
# explore both ends of the range within T rounds.
RASHOMON_EG = EGParams(B=10.0, eta=2.0)


@dataclass(frozen=True, eq=False)
class ReferenceFit:
    model: object
    loss: float  # 0-1 disagreement with the black-box labels
    cross_entropy: float | None = None


def reference_fit(family: str, X, targets, params: EGParams = EGParams()) -> ReferenceFit:
    """Unconstrained fit of the family to the black-box labels."""
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(targets).astype(np.int8)
    if family == "logistic":
        m = fit_logistic(X, t, None, params.logistic)
        loss = float(np.mean(m.predict(X) != t))
        return ReferenceFit(m, loss, logistic_loss(m, X, t))
    if family == "tree":
        m = fit_tree(X, t, None, params.max_depth)
        return ReferenceFit(m, float(np.mean(m.predict(X) != t)))
    raise ValueError(f"Rashomon analysis supports {RASHOMON_FAMILIES}, not {family!r}")


def _constant_members(family: str, d: int):
    if family == "logistic":
        return [LogisticModel(np.zeros(d), -1.0), LogisticModel(np.zeros(d), 1.0)]
    return [TreeModel(TreeArrays.leaf(0.0), 0, d), TreeModel(TreeArrays.leaf(1.0), 0, d)]


@dataclass(frozen=True, eq=False)
class RashomonSpec:
    family: str
    X: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)  # black-box labels
    labels: np.ndarray = field(repr=False)
    groups: np.ndarray = field(repr=False)
    metric: FairnessMetricId = FairnessMetricId.SP
    reference: ReferenceFit | None = None
    tau: float | None = None
    v: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "metric", FairnessMetricId.parse(self.metric))
        if self.metric is FairnessMetricId.EODDS:
            raise ValueError("signed disparity ranges need a single linear gap (sp, pe or eopp)")
        if (self.tau is None) == (self.v is None):
            raise ValueError("give exactly one of tau and v")
        if self.reference is None:
            object.__setattr__(self, "reference", reference_fit(self.family, self.X, self.targets))

    @property
    def bound(self) -> float:
        if self.v is not None:
            return float(self.v)
        return (1.0 + float(self.tau)) * self.reference.loss


@dataclass(frozen=True, eq=False)
class Extreme:
    model: object
    disparity: float
    loss: float


def disparity_extreme(spec: RashomonSpec, direction: str, params: EGParams = RASHOMON_EG,
                      slack: float = 0.01) -> Extreme:
    """Smallest (``"min"``) or largest (``"max"``) signed disparity with loss <= v + slack.

    Candidates are the reduction's iterates, the reference model and the two
    constant members of the family.
    """
    if direction not in ("min", "max"):
        raise ValueError("direction must be 'min' or 'max'")
    v = spec.bound
    if v < spec.reference.loss - 1e-9:
        raise InfeasibleBound(f"bound {v} is below the reference loss {spec.reference.loss}")
    X = np.asarray(spec.X, dtype=np.float64)
    t = np.asarray(spec.targets, dtype=np.float64)
    n = len(t)
    sign = 1.0 if direction == "min" else -1.0
    c = disparity_coefficients(spec.metric, spec.labels, spec.groups)[0]
    row = (1.0 - 2.0 * t) / n
    bound = v - t.sum() / n
    problem = _Problem(X, sign * n * c, 0.0, row[None, :], np.array([bound]), spec.family,
                       params, "")
    result = _run(problem, params)
    candidates = list(result.iterates) + [spec.reference.model]
    candidates += _constant_members(spec.family, X.shape[1])
    best = None
    for m in candidates:
        h = m.predict(X)
        loss = float(np.mean(h != t))
        if loss > v + slack:
            continue
        disp = signed_disparity(h, spec.labels, spec.groups, spec.metric)
        if best is None or sign * disp < sign * best.disparity:
            best = Extreme(m, disp, loss)
    if best is None:
        raise InfeasibleBound(f"no model found with loss <= {v + slack}")
    return best


@dataclass(frozen=True)
class RangeRow:
    v: float
    fidelity: float
    min_disparity: float
    max_disparity: float
    loss_min: float
    loss_max: float
    feasible: bool = True

    @property
    def width(self) -> float:
        return self.max_disparity - self.min_disparity


@dataclass(frozen=True)
class RangeCurve:
    rows: tuple[RangeRow, ...]
    blackbox_disparity: float
    blackbox_unfairness: float
    metric: str = "sp"
    family: str = ""

    def row_at(self, v: float) -> RangeRow:
        return min(self.rows, key=lambda r: abs(r.v - v))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["fidelity", "v", "min_disp", "max_disp", "flags"])
            for r in self.rows:
                if r.feasible:
                    w.writerow([repr(r.fidelity), repr(r.v), repr(r.min_disparity),
                                repr(r.max_disparity), ""])
                else:
                    w.writerow(["", repr(r.v), "", "", "infeasible"])


def unfairness_range(family: str, X, targets, labels, groups, metric="sp", v_grid=None,
                     fidelity_grid=None, params: EGParams = RASHOMON_EG,
                     slack: float = 0.01) -> RangeCurve:
    """Disparity interval per loss bound, widened to be nested as the bound grows.

    Give either ``v_grid`` (loss bounds) or ``fidelity_grid`` (``v = 1 - fidelity``).
    """
    if (v_grid is None) == (fidelity_grid is None):
        raise ValueError("give exactly one of v_grid and fidelity_grid")
    vs = [float(v) for v in v_grid] if v_grid is not None else [1.0 - f for f in fidelity_grid]
    if not vs:
        raise ValueError("grid must be non-empty")
    vs = sorted(set(vs))
    metric = FairnessMetricId.parse(metric)
    ref = reference_fit(family, X, targets, params)
    raw = []
    for v in vs:
        spec = RashomonSpec(family, X, targets, labels, groups, metric, ref, v=v)
        try:
            lo = disparity_extreme(spec, "min", params, slack)
            hi = disparity_extreme(spec, "max", params, slack)
        except InfeasibleBound:
            raw.append((v, None, None))
            continue
        raw.append((v, lo, hi))
    rows = []
    run_lo = run_hi = None
    for v, lo, hi in raw:
        if lo is None:
            rows.append(RangeRow(v, float("nan"), float("nan"), float("nan"), float("nan"),
                                 float("nan"), False))
            continue
        if run_lo is None or lo.disparity < run_lo.disparity:
            run_lo = lo
        if run_hi is None or hi.disparity > run_hi.disparity:
            run_hi = hi
        fid = 1.0 - max(run_lo.loss, run_hi.loss)
        rows.append(RangeRow(v, fid, run_lo.disparity, run_hi.disparity, run_lo.loss,
                             run_hi.loss))
    t = np.asarray(targets)
    return RangeCurve(tuple(rows), signed_disparity(t, labels, groups, metric),
                      unfairness(t, labels, groups, metric), metric.value, family)
