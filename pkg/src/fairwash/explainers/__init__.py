"""Interpretable explainer families: logistic regression, CART trees and rule lists."""

from __future__ import annotations

import json

from .logistic import LogisticConfig, LogisticModel, fit_logistic, logistic_loss
from .mixture import RandomizedClassifier
from .rulelist import (Rule, RuleConstraint, RuleList, RuleSet, fit_rulelist, mine_rules,
                       rulelist_objective)
from .tree import TreeModel, fit_tree

FAMILIES = ("logistic", "tree", "rulelist")


def explainer_predict(model, features):
    """Predictions of any explainer (or anything exposing ``predict``)."""
    return model.predict(features)


def explainer_from_dict(d: dict):
    kind = d["kind"]
    if kind == "logistic":
        return LogisticModel.from_dict(d)
    if kind == "tree":
        return TreeModel.from_dict(d)
    if kind == "rulelist":
        return RuleList.from_dict(d)
    if kind == "mixture":
        return RandomizedClassifier([explainer_from_dict(m) for m in d["members"]], d["weights"])
    raise ValueError(f"unknown explainer kind {kind!r}")


def dump_explainer(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_explainer(path):
    with open(path, encoding="utf-8") as fh:
        return explainer_from_dict(json.load(fh))


__all__ = [
    "FAMILIES", "LogisticConfig", "LogisticModel", "RandomizedClassifier", "Rule",
    "RuleConstraint", "RuleList", "RuleSet", "TreeModel", "dump_explainer",
    "explainer_from_dict", "explainer_predict", "fit_logistic", "fit_rulelist", "fit_tree",
    "load_explainer", "logistic_loss", "mine_rules", "rulelist_objective",
]
