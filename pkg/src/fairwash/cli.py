"""Command-line pipeline: split, train black-boxes, attack, evaluate, report.

Every command reads one JSON config and writes into a run directory::

    splits/{train,suing,test}_<k>.csv     split
    models/<family>.json, perf.csv        train-blackbox
    attack/<family>/sweep.csv, front.csv  attack (plus explainers/*.json)
    generalize/<family>.csv               generalize
    transfer.csv, transfer.json           transfer
    rashomon.csv                          rashomon
    report/*.svg, report/summary.txt      report
    manifest.json                         every command

Exit status is 0 on success, 2 for usage or config errors and 3 for runtime
failures; errors are printed on one line starting with ``error:``.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .attack import (AttackConfig, ParetoFront, SweepRow, EpsilonGrid, make_suing_instance,
                     nondominated, pareto_sweep, write_sweep_csv)
from .blackbox import FAMILIES as BB_FAMILIES
from .blackbox import HyperparamSpace, load_model, save_model, search
from .dataspace import Dataset, SplitSpec, load_dataset, split, synth_generate
from .errors import FairwashError
from .evaluation import evaluate_on, generalization_report, transfer_experiment
from .explainers import FAMILIES as EXPLAINER_FAMILIES
from .explainers import dump_explainer, load_explainer
from .metrics import FairnessMetricId, accuracy, fairness_report
from .rashomon import RASHOMON_EG, RASHOMON_FAMILIES, unfairness_range
from .svg import pareto_svg, range_svg


class ConfigError(Exception):
    """Bad invocation or configuration (exit status 2)."""


DEFAULT_CONFIG = {
    "dataset": {"csv": None, "schema": None, "synthetic": None},
    "split": {"ratios": [0.67, 0.165, 0.165], "seed": 0, "n_resamples": 1, "resample": 0},
    "blackbox": {"families": list(BB_FAMILIES), "n_iter": 25, "seed": 0,
                 "validation_fraction": 0.2, "space": {}},
    "explainer": "logistic",
    "metric": "sp",
    "epsilons": {"n": 300},
    "transfer": {"epsilon": 0.05, "metric": None},
    "rashomon": {"blackbox": "mlp", "family": "logistic", "metric": "sp",
                 "fidelity_grid": [0.98, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7]},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def config_hash(cfg: dict) -> str:
    """Hash of the canonical JSON form; key order does not matter."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class ExperimentConfig:
    raw: dict
    base_dir: Path

    @classmethod
    def load(cls, path, seed: int | None = None) -> "ExperimentConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            user = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {p} is not valid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        raw = _merge(DEFAULT_CONFIG, user)
        if seed is not None:
            raw["split"]["seed"] = seed
            raw["blackbox"]["seed"] = seed
            if raw["dataset"].get("synthetic"):
                raw["dataset"]["synthetic"]["seed"] = seed
        cfg = cls(raw, p.parent)
        cfg.validate()
        return cfg

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def path(self, value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def validate(self) -> None:
        r = self.raw
        ds = r["dataset"]
        if not ds.get("synthetic"):
            for key in ("csv", "schema"):
                if not ds.get(key):
                    raise ConfigError(f"dataset.{key} is required unless dataset.synthetic is set")
                if not self.path(ds[key]).is_file():
                    raise ConfigError(f"dataset.{key} not found: {self.path(ds[key])}")
        for fam in r["blackbox"]["families"]:
            if fam not in BB_FAMILIES:
                raise ConfigError(f"unknown black-box family {fam!r}")
        if r["explainer"] not in EXPLAINER_FAMILIES:
            raise ConfigError(f"unknown explainer family {r['explainer']!r}")
        if r["rashomon"]["family"] not in RASHOMON_FAMILIES:
            raise ConfigError(f"rashomon.family must be one of {RASHOMON_FAMILIES}")
        try:
            if FairnessMetricId.parse(r["rashomon"]["metric"]) is FairnessMetricId.EODDS:
                raise ConfigError("rashomon.metric must be sp, pe or eopp")
            FairnessMetricId.parse(r["metric"])
            self.split_spec
            self.epsilon_grid
            self.space
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    @property
    def metric(self) -> FairnessMetricId:
        return FairnessMetricId.parse(self.raw["metric"])

    @property
    def split_spec(self) -> SplitSpec:
        s = self.raw["split"]
        return SplitSpec(tuple(float(v) for v in s["ratios"]), int(s["seed"]),
                         int(s["n_resamples"]))

    @property
    def space(self) -> HyperparamSpace:
        return HyperparamSpace(**{k: tuple(v) for k, v in self.raw["blackbox"]["space"].items()})

    @property
    def epsilon_grid(self) -> EpsilonGrid:
        e = self.raw["epsilons"]
        if isinstance(e, dict):
            return EpsilonGrid.uniform(int(e.get("n", 300)))
        return EpsilonGrid(e)

    def dataset(self) -> Dataset:
        ds = self.raw["dataset"]
        if ds.get("synthetic"):
            s = ds["synthetic"]
            return synth_generate(int(s.get("n", 10000)), int(s.get("n_features", 10)),
                                  float(s.get("bias", 0.3)), int(s.get("seed", 0)))
        return load_dataset(self.path(ds["csv"]), self.path(ds["schema"]))

    def partitions(self):
        """Train, suing and test sets of the configured resample (recomputed, not re-read)."""
        return split(self.dataset(), self.split_spec, int(self.raw["split"]["resample"]))


@dataclass
class RunManifest:
    """Index of a run directory; rewritten after each command."""

    path: Path
    data: dict = field(default_factory=dict)

    @classmethod
    def open(cls, out: Path) -> "RunManifest":
        p = out / "manifest.json"
        data = json.loads(p.read_text(encoding="utf-8")) if p.is_file() else {}
        data.setdefault("commands", {})
        return cls(p, data)

    def record(self, command: str, cfg: ExperimentConfig | None, files, started: str) -> None:
        out = self.path.parent
        self.data["tool_version"] = __version__
        if cfg is not None:
            self.data["config_hash"] = cfg.hash
        self.data["commands"][command] = {
            "files": sorted(str(Path(f).relative_to(out)) for f in files),
            "started": started,
            "finished": _now(),
        }
        self.path.write_text(json.dumps(self.data, sort_keys=True, indent=1) + "\n",
                             encoding="utf-8")


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_rows(path: Path) -> list[dict]:
    if not path.is_file():
        raise ConfigError(f"missing input {path}; run the earlier command first")
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _models(cfg: ExperimentConfig, out: Path) -> dict:
    models = {}
    for fam in cfg.raw["blackbox"]["families"]:
        p = out / "models" / f"{fam}.json"
        if not p.is_file():
            raise ConfigError(f"missing black-box {p}; run train-blackbox first")
        models[fam] = load_model(p)
    return models


# -- commands ---------------------------------------------------------------

def cmd_split(cfg: ExperimentConfig, out: Path, jobs: int) -> list[Path]:
    data = cfg.dataset()
    spec = cfg.split_spec
    files = []
    for k in range(spec.n_resamples):
        for name, part in zip(("train", "suing", "test"), split(data, spec, k)):
            p = out / "splits" / f"{name}_{k}.csv"
            p.parent.mkdir(parents=True, exist_ok=True)
            part.to_csv(p)
            files.append(p)
    return files


PERF_COLUMNS = ("model", "family", "partition", "accuracy", "sp", "pe", "eopp", "eodds")


def _validation_cut(train: Dataset, fraction: float, seed: int):
    n = len(train)
    n_val = max(1, int(np.floor(n * fraction)))
    perm = np.random.default_rng([seed, 7919]).permutation(n)
    return train.take(np.sort(perm[n_val:])), train.take(np.sort(perm[:n_val]))


def cmd_train_blackbox(cfg: ExperimentConfig, out: Path, jobs: int) -> list[Path]:
    b = cfg.raw["blackbox"]
    train, suing, test = cfg.partitions()
    fit, val = _validation_cut(train, float(b["validation_fraction"]), int(b["seed"]))
    files, rows = [], []
    (out / "models").mkdir(parents=True, exist_ok=True)
    for fam in b["families"]:
        model = search(fam, fit, val, cfg.space, int(b["n_iter"]), int(b["seed"]), jobs)
        p = out / "models" / f"{fam}.json"
        save_model(model, p)
        files.append(p)
        for name, part in (("train", train), ("suing", suing), ("test", test)):
            preds = model.predict(part)
            rep = fairness_report(preds, part.labels, part.groups)
            rows.append([model.model_id, fam, name, repr(accuracy(preds, part.labels)),
                         repr(rep.sp), repr(rep.pe), repr(rep.eopp), repr(rep.eodds)])
    p = out / "perf.csv"
    _write_rows(p, PERF_COLUMNS, rows)
    return files + [p]


FRONT_COLUMNS = ("epsilon", "fidelity_sg", "unfairness_sg", "accuracy_sg", "explainer_path")


def cmd_attack(cfg: ExperimentConfig, out: Path, jobs: int) -> list[Path]:
    _, suing, _ = cfg.partitions()
    family, metric = cfg.raw["explainer"], cfg.metric
    files = []
    for fam, b in _models(cfg, out).items():
        inst = make_suing_instance(b, suing)
        front = pareto_sweep(inst, family, metric, cfg.epsilon_grid, AttackConfig(), jobs)
        d = out / "attack" / fam
        (d / "explainers").mkdir(parents=True, exist_ok=True)
        paths = {}
        for i, row in enumerate(front.rows):
            if row.point is None:
                continue
            rel = f"explainers/{i:04d}.json"
            dump_explainer(row.point.explainer, d / rel)
            files.append(d / rel)
            paths[i] = rel
        write_sweep_csv(front, d / "sweep.csv", paths)
        index = {id(r.point): i for i, r in enumerate(front.rows) if r.point is not None}
        _write_rows(d / "front.csv", FRONT_COLUMNS, [
            [repr(p.epsilon), repr(p.fidelity), repr(p.unfairness), repr(p.accuracy),
             paths[index[id(p)]]] for p in front.points])
        files += [d / "sweep.csv", d / "front.csv"]
    return files


def _load_sweep(d: Path, b, suing: Dataset, metric) -> ParetoFront:
    rows = []
    for r in _read_rows(d / "sweep.csv"):
        eps = float(r["epsilon"])
        if not r["explainer_path"]:
            rows.append(SweepRow(eps, None, r["flags"]))
            continue
        q = evaluate_on(load_explainer(d / r["explainer_path"]), b, suing, metric, "suing")
        q = type(q)(eps, q.fidelity, q.unfairness, q.accuracy, q.explainer, "suing")
        rows.append(SweepRow(eps, q))
    pts = [r.point for r in rows if r.point is not None]
    return ParetoFront(tuple(nondominated(pts)), float("nan"), tuple(rows), metric.value)


def cmd_generalize(cfg: ExperimentConfig, out: Path, jobs: int) -> list[Path]:
    _, suing, test = cfg.partitions()
    files = []
    for fam, b in _models(cfg, out).items():
        sweep = _load_sweep(out / "attack" / fam, b, suing, cfg.metric)
        rep = generalization_report(sweep, b, test, cfg.metric, suing)
        p = out / "generalize" / f"{fam}.csv"
        p.parent.mkdir(parents=True, exist_ok=True)
        rep.write_csv(p)
        s = out / "generalize" / f"{fam}_summary.json"
        s.write_text(json.dumps(rep.to_dict()["summary"], sort_keys=True, indent=1) + "\n",
                     encoding="utf-8")
        files += [p, s]
    return files


def cmd_transfer(cfg: ExperimentConfig, out: Path, jobs: int) -> list[Path]:
    t = cfg.raw["transfer"]
    _, suing, _ = cfg.partitions()
    metric = FairnessMetricId.parse(t.get("metric") or cfg.metric)
    rep = transfer_experiment(_models(cfg, out), suing, cfg.raw["explainer"], metric,
                              float(t["epsilon"]))
    rep.write_csv(out / "transfer.csv")
    rep.write_json(out / "transfer.json")
    return [out / "transfer.csv", out / "transfer.json"]


def cmd_rashomon(cfg: ExperimentConfig, out: Path, jobs: int) -> list[Path]:
    r = cfg.raw["rashomon"]
    _, suing, _ = cfg.partitions()
    models = _models(cfg, out)
    if r["blackbox"] not in models:
        raise ConfigError(f"rashomon.blackbox {r['blackbox']!r} is not among the trained models")
    yb = models[r["blackbox"]].predict(suing)
    curve = unfairness_range(r["family"], suing.features, yb, suing.labels, suing.groups,
                             r["metric"], fidelity_grid=r["fidelity_grid"], params=RASHOMON_EG)
    curve.write_csv(out / "rashomon.csv")
    ref = out / "rashomon_reference.json"
    ref.write_text(json.dumps({"blackbox": r["blackbox"], "metric": curve.metric,
                               "blackbox_disparity": curve.blackbox_disparity,
                               "blackbox_unfairness": curve.blackbox_unfairness},
                              sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return [out / "rashomon.csv", ref]


def cmd_report(out: Path, metric: str | None = None) -> list[Path]:
    perf_path = out / "perf.csv"
    if not perf_path.is_file():
        raise ConfigError(f"nothing to report in {out}: perf.csv not found")
    perf = _read_rows(perf_path)
    if metric is None:
        metric = _run_metric(out)
    bb_unf = {r["family"]: float(r[metric]) for r in perf if r["partition"] == "suing"}
    rep = out / "report"
    rep.mkdir(exist_ok=True)
    files, lines = [], [f"metric: {metric}"]
    for fam in sorted(bb_unf):
        front = out / "attack" / fam / "front.csv"
        if not front.is_file():
            continue
        pts = [(float(r["unfairness_sg"]), float(r["fidelity_sg"])) for r in _read_rows(front)]
        p = rep / f"pareto_{fam}.svg"
        p.write_text(pareto_svg([(fam, pts, bb_unf[fam])], f"{fam}: fidelity vs {metric}",
                                xlabel=f"unfairness ({metric})"), encoding="utf-8")
        files.append(p)
        best = max(pts, key=lambda q: (q[1], -q[0]))
        lines.append(f"{fam}: black-box {metric} {bb_unf[fam]:.4f}; {len(pts)} front points; "
                     f"best fidelity {best[1]:.4f} at unfairness {best[0]:.4f}")
    rcsv = out / "rashomon.csv"
    if rcsv.is_file():
        rows = [r for r in _read_rows(rcsv) if r["fidelity"]]
        ref = json.loads((out / "rashomon_reference.json").read_text(encoding="utf-8"))
        p = rep / "rashomon.svg"
        p.write_text(range_svg([float(r["fidelity"]) for r in rows],
                               [float(r["min_disp"]) for r in rows],
                               [float(r["max_disp"]) for r in rows],
                               ref["blackbox_disparity"],
                               f"disparity range ({ref['metric']}, {ref['blackbox']})"),
                     encoding="utf-8")
        files.append(p)
        for r in rows:
            lines.append(f"rashomon fidelity {float(r['fidelity']):.3f}: "
                         f"[{float(r['min_disp']):.4f}, {float(r['max_disp']):.4f}]")
    if not files:
        raise ConfigError(f"nothing to report in {out}: no fronts or ranges found")
    s = rep / "summary.txt"
    s.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return files + [s]


def _run_metric(out: Path) -> str:
    m = out / "manifest.json"
    if m.is_file():
        return json.loads(m.read_text(encoding="utf-8")).get("metric", "sp")
    return "sp"


COMMANDS = {
    "split": cmd_split,
    "train-blackbox": cmd_train_blackbox,
    "attack": cmd_attack,
    "generalize": cmd_generalize,
    "transfer": cmd_transfer,
    "rashomon": cmd_rashomon,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--out", default="run", help="run directory (default: ./run)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--seed", type=int, default=None, help="override every seed in the config")
    parser = _Parser(prog="fairwash", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in (*COMMANDS, "report"):
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    started = _now()
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if args.command == "report":
            if not out.is_dir():
                raise ConfigError(f"run directory not found: {out}")
            files = cmd_report(out)
            cfg = None
        else:
            if not args.config:
                raise ConfigError(f"{args.command} needs --config")
            cfg = ExperimentConfig.load(args.config, args.seed)
            out.mkdir(parents=True, exist_ok=True)
            files = COMMANDS[args.command](cfg, out, args.jobs)
        manifest = RunManifest.open(out)
        if cfg is not None:
            manifest.data["metric"] = cfg.metric.value
        manifest.record(args.command, cfg, files, started)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FairwashError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
