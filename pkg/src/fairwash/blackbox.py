"""Black-box classifiers: AdaBoost stumps, random forest, MLP and gradient-boosted trees.

Training is delegated to scikit-learn; the fitted parameters are exported
into plain arrays, and prediction runs from those arrays only, so a model
reloaded from JSON predicts exactly like the one that was trained.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import AdaBoostClassifier, GradientBoostingClassifier, RandomForestClassifier
from sklearn.exceptions import ConvergenceWarning
from sklearn.neural_network import MLPClassifier
from sklearn.tree import DecisionTreeClassifier

from ._treearrays import TreeArrays
from .dataspace import Dataset
from .errors import AllCandidatesFailed, DegenerateTraining, SchemaMismatch
from .metrics import accuracy

FAMILIES = ("adaboost", "rf", "mlp", "gbt")
MODEL_VERSION = 1


@dataclass(frozen=True, eq=False)
class BlackBoxModel:
    family: str
    params: dict
    seed: int
    fingerprint: str
    n_features: int
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown black-box family {self.family!r}")

    @property
    def model_id(self) -> str:
        digest = hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()[:10]
        return f"{self.family}-{digest}"

    def _arrays(self):
        cached = self.__dict__.get("_cache")
        if cached is None:
            p = self.params
            if self.family == "mlp":
                cached = ([np.asarray(c, dtype=np.float64) for c in p["coefs"]],
                          [np.asarray(b, dtype=np.float64) for b in p["intercepts"]])
            else:
                cached = [TreeArrays.from_dict(t) for t in p["trees"]]
            object.__setattr__(self, "_cache", cached)
        return cached

    def score(self, features) -> np.ndarray:
        """Internal score: margin (adaboost, gbt, mlp logit) or probability (rf)."""
        X = _check_features(self, features)
        p = self.params
        if self.family == "mlp":
            coefs, intercepts = self._arrays()
            h = X
            for W, b in zip(coefs[:-1], intercepts[:-1]):
                h = np.maximum(h @ W + b, 0.0)
            return (h @ coefs[-1] + intercepts[-1]).ravel()
        trees = self._arrays()
        if self.family == "adaboost":
            w = np.asarray(p["weights"], dtype=np.float64)
            if len(trees) == 0:
                return np.zeros(X.shape[0])
            votes = np.array([2.0 * t.predict_value(X) - 1.0 for t in trees])
            return w @ votes / w.sum()
        if self.family == "rf":
            return np.mean([t.predict_value(X) for t in trees], axis=0)
        raw = np.full(X.shape[0], float(p["init"]))
        for t in trees:
            raw += float(p["learning_rate"]) * t.predict_value(X)
        return raw

    def predict(self, features) -> np.ndarray:
        threshold = 0.5 if self.family == "rf" else 0.0
        return (self.score(features) >= threshold).astype(np.int8)

    def to_dict(self) -> dict:
        return {"version": MODEL_VERSION, "family": self.family, "params": self.params,
                "seed": self.seed, "fingerprint": self.fingerprint,
                "n_features": self.n_features, "hyperparams": self.hyperparams}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "BlackBoxModel":
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        return cls(d["family"], d["params"], d["seed"], d["fingerprint"], d["n_features"],
                   d.get("hyperparams", {}))


def _check_features(model: BlackBoxModel, features) -> np.ndarray:
    if isinstance(features, Dataset):
        if features.fingerprint != model.fingerprint:
            raise SchemaMismatch("dataset schema does not match the model fingerprint")
        X = features.features
    else:
        X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise SchemaMismatch(f"expected {model.n_features} columns, got {X.shape}")
    return X


def predict(model: BlackBoxModel, features) -> np.ndarray:
    """0/1 predictions; scores exactly at the threshold predict 1."""
    return model.predict(features)


def save_model(model: BlackBoxModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model.to_json())
        fh.write("\n")


def load_model(path) -> BlackBoxModel:
    with open(path, encoding="utf-8") as fh:
        return BlackBoxModel.from_dict(json.load(fh))


def _export_tree(est, leaf) -> dict:
    t = est.tree_
    feature = np.where(t.children_left < 0, -1, t.feature)
    value = np.array([leaf(t.value[i, 0]) for i in range(t.node_count)])
    return TreeArrays(feature, t.threshold, t.children_left, t.children_right, value).to_dict()


def _class1_fraction(counts):
    s = counts.sum()
    return float(counts[1] / s) if s > 0 else 0.0


@dataclass(frozen=True)
class HyperparamSpace:
    adaboost_rounds: tuple[int, int] = (50, 500)
    rf_trees: tuple[int, int] = (50, 300)
    rf_depth: tuple[int, int] = (3, 16)
    mlp_widths: tuple[int, ...] = (8, 16, 32, 64)
    mlp_layers: tuple[int, ...] = (1, 2)
    mlp_lr: tuple[float, float] = (1e-3, 1e-1)
    mlp_epochs: tuple[int, int] = (20, 200)
    gbt_rounds: tuple[int, int] = (50, 500)
    gbt_depth: tuple[int, int] = (2, 6)
    gbt_shrinkage: tuple[float, float] = (0.05, 0.3)

    def sample(self, family: str, rng: np.random.Generator) -> dict:
        def ri(lo_hi):
            return int(rng.integers(lo_hi[0], lo_hi[1] + 1))

        def log_uniform(lo_hi):
            return float(np.exp(rng.uniform(np.log(lo_hi[0]), np.log(lo_hi[1]))))

        if family == "adaboost":
            return {"n_estimators": ri(self.adaboost_rounds)}
        if family == "rf":
            return {"n_estimators": ri(self.rf_trees), "max_depth": ri(self.rf_depth)}
        if family == "mlp":
            width = int(rng.choice(self.mlp_widths))
            layers = int(rng.choice(self.mlp_layers))
            return {"hidden": [width] * layers, "learning_rate": log_uniform(self.mlp_lr),
                    "epochs": ri(self.mlp_epochs)}
        if family == "gbt":
            return {"n_estimators": ri(self.gbt_rounds), "max_depth": ri(self.gbt_depth),
                    "learning_rate": float(rng.uniform(*self.gbt_shrinkage))}
        raise ValueError(f"unknown black-box family {family!r}")


def train(family: str, train_data: Dataset, hp: dict, seed: int = 0) -> BlackBoxModel:
    """Fit one black-box with fixed hyperparameters ``hp``; deterministic given ``seed``."""
    X, y = train_data.features, train_data.labels.astype(np.int64)
    if len(np.unique(y)) < 2:
        raise DegenerateTraining("training labels are constant")
    seed = int(seed)
    if family == "adaboost":
        clf = AdaBoostClassifier(DecisionTreeClassifier(max_depth=1),
                                 n_estimators=hp["n_estimators"], random_state=seed)
        clf.fit(X, y)
        n = len(clf.estimators_)
        trees = [_export_tree(e, lambda c: float(np.argmax(c))) for e in clf.estimators_]
        params = {"trees": trees, "weights": clf.estimator_weights_[:n].tolist()}
    elif family == "rf":
        clf = RandomForestClassifier(n_estimators=hp["n_estimators"], max_depth=hp["max_depth"],
                                     random_state=seed, n_jobs=1)
        clf.fit(X, y)
        params = {"trees": [_export_tree(e, _class1_fraction) for e in clf.estimators_]}
    elif family == "mlp":
        clf = MLPClassifier(hidden_layer_sizes=tuple(hp["hidden"]),
                            learning_rate_init=hp["learning_rate"], max_iter=hp["epochs"],
                            batch_size=min(64, len(y)), random_state=seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            clf.fit(X, y)
        params = {"coefs": [c.tolist() for c in clf.coefs_],
                  "intercepts": [b.tolist() for b in clf.intercepts_]}
    elif family == "gbt":
        clf = GradientBoostingClassifier(n_estimators=hp["n_estimators"],
                                         max_depth=hp["max_depth"],
                                         learning_rate=hp["learning_rate"], random_state=seed)
        clf.fit(X, y)
        p1 = float(y.mean())
        params = {"init": float(np.log(p1 / (1.0 - p1))), "learning_rate": hp["learning_rate"],
                  "trees": [_export_tree(e[0], lambda c: float(c[0])) for e in clf.estimators_]}
    else:
        raise ValueError(f"unknown black-box family {family!r}")
    return BlackBoxModel(family, params, seed, train_data.fingerprint, train_data.n_features,
                         dict(hp))


def _candidate(args):
    family, train_data, validation_data, hp, seed = args
    try:
        model = train(family, train_data, hp, seed)
    except Exception as exc:  # noqa: BLE001 - a failed candidate is skipped
        return None, repr(exc)
    return model, accuracy(model.predict(validation_data), validation_data.labels)


def search(family: str, train_data: Dataset, validation_data: Dataset,
           space: HyperparamSpace = HyperparamSpace(), n_iter: int = 25, seed: int = 0,
           jobs: int = 1) -> BlackBoxModel:
    """Uniform random search; the best validation accuracy wins, earlier draws win ties.

    Draw ``i`` samples hyperparameters and trains with an RNG keyed by
    ``(seed, i)``, so the result does not depend on ``jobs``.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    tasks = []
    for i in range(n_iter):
        rng = np.random.default_rng([seed, i])
        hp = space.sample(family, rng)
        tasks.append((family, train_data, validation_data, hp, int(rng.integers(2**31 - 1))))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_candidate, tasks))
    else:
        results = [_candidate(t) for t in tasks]
    best, best_acc = None, -1.0
    for model, acc in results:
        if model is not None and acc > best_acc:
            best, best_acc = model, acc
    if best is None:
        raise AllCandidatesFailed(f"all {n_iter} candidates failed: {results[0][1]}")
    return best
