"""Group fairness metrics, fidelity, accuracy and label agreement.

All counting is done on integers and the division happens last, so results
are bit-reproducible. Group 0 is the protected group; signed disparities are
group 0 minus group 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, SingleGroup


class FairnessMetricId(str, enum.Enum):
    SP = "sp"
    PE = "pe"
    EOPP = "eopp"
    EODDS = "eodds"

    @classmethod
    def parse(cls, value) -> "FairnessMetricId":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


METRICS = tuple(FairnessMetricId)


@dataclass(frozen=True)
class GroupCounts:
    n: tuple[int, int]
    pos: tuple[int, int]
    tp: tuple[int, int]
    fp: tuple[int, int]
    cond_pos: tuple[int, int]
    cond_neg: tuple[int, int]


@dataclass(frozen=True)
class FairnessReport:
    sp: float
    pe: float
    eopp: float
    eodds: float
    undefined_flags: frozenset = frozenset()

    def to_dict(self) -> dict:
        return {"sp": self.sp, "pe": self.pe, "eopp": self.eopp, "eodds": self.eodds,
                "flags": sorted(self.undefined_flags)}


def _binary(v, name):
    a = np.asarray(v)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    a = a.astype(np.int64)
    if a.size and (a.min() < 0 or a.max() > 1):
        raise ValueError(f"{name} must be binary")
    return a


def count_groups(preds, labels, groups) -> GroupCounts:
    p, y, g = _binary(preds, "preds"), _binary(labels, "labels"), _binary(groups, "groups")
    if not (len(p) == len(y) == len(g)):
        raise LengthMismatch("preds, labels and groups must have equal length")
    out = {k: [0, 0] for k in ("n", "pos", "tp", "fp", "cond_pos", "cond_neg")}
    for k in (0, 1):
        m = g == k
        pk, yk = p[m], y[m]
        out["n"][k] = int(m.sum())
        out["pos"][k] = int(pk.sum())
        out["tp"][k] = int((pk & yk).sum())
        out["fp"][k] = int((pk & (1 - yk)).sum())
        out["cond_pos"][k] = int(yk.sum())
        out["cond_neg"][k] = out["n"][k] - out["cond_pos"][k]
    if out["n"][0] == 0 or out["n"][1] == 0:
        raise SingleGroup("both groups must be present")
    return GroupCounts(**{k: tuple(v) for k, v in out.items()})


def _rate_gap(a0: int, b0: int, a1: int, b1: int) -> tuple[float, bool]:
    """a0/b0 - a1/b1 with one final division; (0, True) when a denominator is 0."""
    if b0 == 0 or b1 == 0:
        return 0.0, True
    return (a0 * b1 - a1 * b0) / (b0 * b1), False


def _signed_parts(c: GroupCounts) -> dict:
    return {
        FairnessMetricId.SP: _rate_gap(c.pos[0], c.n[0], c.pos[1], c.n[1]),
        FairnessMetricId.PE: _rate_gap(c.fp[0], c.cond_neg[0], c.fp[1], c.cond_neg[1]),
        FairnessMetricId.EOPP: _rate_gap(c.tp[0], c.cond_pos[0], c.tp[1], c.cond_pos[1]),
    }


def _signed_from_counts(c: GroupCounts, metric: FairnessMetricId) -> tuple[float, bool]:
    parts = _signed_parts(c)
    if metric is FairnessMetricId.EODDS:
        (pe, fpe), (eo, feo) = parts[FairnessMetricId.PE], parts[FairnessMetricId.EOPP]
        return (eo if abs(eo) > abs(pe) else pe), (fpe or feo)
    return parts[metric]


def signed_disparity_with_flag(preds, labels, groups, metric) -> tuple[float, bool]:
    return _signed_from_counts(count_groups(preds, labels, groups), FairnessMetricId.parse(metric))


def signed_disparity(preds, labels, groups, metric) -> float:
    """Group-0 minus group-1 rate difference; for EOdds the larger-magnitude component."""
    return signed_disparity_with_flag(preds, labels, groups, metric)[0]


def unfairness_with_flag(preds, labels, groups, metric) -> tuple[float, bool]:
    value, flag = signed_disparity_with_flag(preds, labels, groups, metric)
    return abs(value), flag


def unfairness(preds, labels, groups, metric) -> float:
    """Absolute disparity for one of sp / pe / eopp / eodds.

    Undefined metrics (an empty conditioning cell) evaluate to 0; use
    :func:`unfairness_with_flag` or :func:`fairness_report` to see the flag.
    """
    return unfairness_with_flag(preds, labels, groups, metric)[0]


def fairness_report(preds, labels, groups) -> FairnessReport:
    c = count_groups(preds, labels, groups)
    vals, flags = {}, set()
    for m in METRICS:
        v, f = _signed_from_counts(c, m)
        vals[m.value] = abs(v)
        if f:
            flags.add(m.value)
    return FairnessReport(undefined_flags=frozenset(flags), **vals)


def _agreement(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch("vectors must be one-dimensional with equal length")
    if a.size == 0:
        raise LengthMismatch("vectors must be non-empty")
    return int(np.count_nonzero(a == b)) / a.size


def fidelity(explainer_preds, blackbox_preds) -> float:
    """Fraction of rows where the explainer reproduces the black-box decision."""
    return _agreement(explainer_preds, blackbox_preds)


def accuracy(preds, labels) -> float:
    return _agreement(preds, labels)


def label_agreement(preds_a, preds_b) -> float:
    return _agreement(preds_a, preds_b)
