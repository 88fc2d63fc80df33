"""Generalization of fairwashed explainers to a held-out set, and transfer across black-boxes."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

from .attack import AttackConfig, ParetoFront, TradeoffPoint, fairwash, make_suing_instance
from .blackbox import BlackBoxModel
from .dataspace import Dataset
from .errors import FairwashError, ProvenanceViolation, SchemaMismatch
from .metrics import FairnessMetricId, accuracy, fidelity, label_agreement, unfairness


def evaluate_on(explainer, b: BlackBoxModel, eval_set: Dataset, metric,
                eval_id: str = "") -> TradeoffPoint:
    """Fidelity to ``b`` and unfairness of the explainer on an arbitrary set."""
    if eval_set.fingerprint != b.fingerprint:
        raise SchemaMismatch("evaluation set schema does not match the black-box")
    preds = explainer.predict(eval_set.features)
    bb = b.predict(eval_set)
    return TradeoffPoint(
        epsilon=float("nan"),
        fidelity=fidelity(preds, bb),
        unfairness=unfairness(preds, eval_set.labels, eval_set.groups, metric),
        accuracy=accuracy(preds, eval_set.labels),
        explainer=explainer,
        eval_id=eval_id,
    )


@dataclass(frozen=True)
class GapRow:
    epsilon: float
    fidelity_sg: float
    fidelity_test: float
    unfairness_sg: float
    unfairness_test: float


@dataclass(frozen=True)
class GapReport:
    rows: tuple[GapRow, ...]
    mean_fidelity_gap: float
    max_fidelity_gap: float
    mean_unfairness_gap: float
    max_unfairness_gap: float

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows],
                "summary": {"mean_fidelity_gap": self.mean_fidelity_gap,
                            "max_fidelity_gap": self.max_fidelity_gap,
                            "mean_unfairness_gap": self.mean_unfairness_gap,
                            "max_unfairness_gap": self.max_unfairness_gap}}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epsilon", "fidelity_sg", "fidelity_test", "unfairness_sg",
                        "unfairness_test"])
            for r in self.rows:
                w.writerow([repr(r.epsilon), repr(r.fidelity_sg), repr(r.fidelity_test),
                            repr(r.unfairness_sg), repr(r.unfairness_test)])


def check_disjoint(a: Dataset, b: Dataset) -> None:
    if a.source and a.source == b.source and np.intersect1d(a.row_ids, b.row_ids).size:
        raise ProvenanceViolation("suing group and test set share rows")


def generalization_report(sweep: ParetoFront, b: BlackBoxModel, test: Dataset, metric,
                          suing: Dataset | None = None, check_provenance: bool = True) -> GapReport:
    """Re-evaluate every explainer of a sweep on ``test`` and summarize the gaps."""
    if check_provenance and suing is not None:
        check_disjoint(suing, test)
    metric = FairnessMetricId.parse(metric)
    rows = []
    for r in sweep.rows:
        if r.point is None:
            continue
        p = r.point
        q = evaluate_on(p.explainer, b, test, metric, "test")
        rows.append(GapRow(p.epsilon, p.fidelity, q.fidelity, p.unfairness, q.unfairness))
    if not rows:
        raise FairwashError("sweep contains no explainers")
    fg = np.array([abs(r.fidelity_sg - r.fidelity_test) for r in rows])
    ug = np.array([abs(r.unfairness_sg - r.unfairness_test) for r in rows])
    return GapReport(tuple(rows), float(fg.mean()), float(fg.max()), float(ug.mean()),
                     float(ug.max()))


@dataclass(frozen=True)
class TransferCell:
    teacher: str
    student: str
    label_agreement: float | None
    fidelity: float | None
    unfairness: float | None
    teacher_fidelity: float | None = None
    blank: bool = False
    note: str = ""


@dataclass(frozen=True)
class TransferReport:
    epsilon: float
    metric: str
    family: str
    names: tuple[str, ...]
    cells: tuple[TransferCell, ...]

    def cell(self, teacher: str, student: str) -> TransferCell:
        for c in self.cells:
            if c.teacher == teacher and c.student == student:
                return c
        raise KeyError((teacher, student))

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "metric": self.metric, "family": self.family,
                "names": list(self.names), "cells": [asdict(c) for c in self.cells]}

    def write_csv(self, path) -> None:
        def f(v):
            return "" if v is None else repr(v)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["teacher", "student", "label_agreement", "fidelity", "unfairness",
                        "teacher_fidelity", "blank"])
            for c in self.cells:
                w.writerow([c.teacher, c.student, f(c.label_agreement), f(c.fidelity),
                            f(c.unfairness), f(c.teacher_fidelity), "1" if c.blank else "0"])

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")


def transfer_experiment(models: dict, suing: Dataset, family: str, metric, epsilon: float,
                        config: AttackConfig = AttackConfig(),
                        eval_set: Dataset | None = None) -> TransferReport:
    """Fairwash each teacher, then score the explainer against every model.

    ``models`` maps a display name to a black-box. Cells are evaluated on the
    suing group unless ``eval_set`` is given. An infeasible attack leaves
    the teacher's whole row blank.
    """
    if len(models) < 2:
        raise ValueError("transfer needs at least two black-boxes")
    metric = FairnessMetricId.parse(metric)
    names = tuple(models)
    target = suing if eval_set is None else eval_set
    preds = {k: models[k].predict(target) for k in names}
    cells = []
    for teacher in names:
        inst = make_suing_instance(models[teacher], suing)
        try:
            point = fairwash(inst, family, metric, epsilon, config)
        except FairwashError as exc:
            for student in names:
                cells.append(TransferCell(teacher, student, None, None, None, None, True,
                                          type(exc).__name__))
            continue
        e = point.explainer.predict(target.features)
        z = unfairness(e, target.labels, target.groups, metric)
        t_fid = fidelity(e, preds[teacher])
        for student in names:
            cells.append(TransferCell(
                teacher, student,
                label_agreement=label_agreement(preds[teacher], preds[student]),
                fidelity=fidelity(e, preds[student]),
                unfairness=z,
                teacher_fidelity=t_fid,
            ))
    return TransferReport(float(epsilon), metric.value, family, names, tuple(cells))


def label_agreement_matrix(models, eval_set) -> np.ndarray:
    """Pairwise label agreement; symmetric with a unit diagonal."""
    models = list(models.values()) if isinstance(models, dict) else list(models)
    if not models:
        raise ValueError("need at least one model")
    X = eval_set.features if isinstance(eval_set, Dataset) else np.asarray(eval_set)
    P = [m.predict(X) for m in models]
    k = len(P)
    M = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            M[i, j] = M[j, i] = label_agreement(P[i], P[j])
    return M
