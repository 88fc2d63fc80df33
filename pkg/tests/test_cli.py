import csv
import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from fairwash.attack import TradeoffPoint, dominates
from fairwash.cli import config_hash, main

NS = "{http://www.w3.org/2000/svg}"
PIPELINE = ["split", "train-blackbox", "attack", "generalize", "transfer", "rashomon", "report"]

SMALL = {
    "dataset": {"synthetic": {"n": 1500, "n_features": 8, "bias": 0.3, "seed": 0}},
    "split": {"n_resamples": 2},
    "blackbox": {"n_iter": 2, "space": {"adaboost_rounds": [20, 40], "rf_trees": [10, 20],
                                        "rf_depth": [3, 6], "mlp_epochs": [10, 20],
                                        "gbt_rounds": [20, 40]}},
    "epsilons": [0.02, 0.05, 0.1, 0.3],
    "transfer": {"epsilon": 0.05},
    "rashomon": {"fidelity_grid": [0.95, 0.9]},
}


def run_pipeline(base: Path, jobs: int, cfg=SMALL):
    base.mkdir(parents=True, exist_ok=True)
    c = base / "config.json"
    c.write_text(json.dumps(cfg))
    out = base / "run"
    for cmd in PIPELINE:
        code = main([cmd, "--config", str(c), "--out", str(out), "--jobs", str(jobs)])
        assert code == 0, cmd
    return out


def rows(p):
    with open(p, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    return run_pipeline(tmp_path_factory.mktemp("cli1"), jobs=1)


def test_split_outputs(run):
    for k in (0, 1):
        sizes = [len(rows(run / "splits" / f"{n}_{k}.csv")) for n in ("train", "suing", "test")]
        assert sizes == [1005, 247, 248] or sizes == [1006, 247, 247]
    assert (run / "manifest.json").is_file()


def test_train_blackbox_outputs(run):
    assert sorted(p.name for p in (run / "models").iterdir()) == \
        ["adaboost.json", "gbt.json", "mlp.json", "rf.json"]
    perf = rows(run / "perf.csv")
    assert len(perf) == 12
    assert list(perf[0]) == ["model", "family", "partition", "accuracy", "sp", "pe", "eopp",
                             "eodds"]


def test_attack_outputs_and_front_oracle(run):
    for fam in ("adaboost", "rf", "mlp", "gbt"):
        sweep = rows(run / "attack" / fam / "sweep.csv")
        assert len(sweep) == 4
        pts = [TradeoffPoint(float(r["epsilon"]), float(r["fidelity_sg"]),
                             float(r["unfairness_sg"]), float(r["accuracy_sg"]))
               for r in sweep if r["fidelity_sg"]]
        front = rows(run / "attack" / fam / "front.csv")
        fr = {(float(r["unfairness_sg"]), float(r["fidelity_sg"])) for r in front}
        want = {(p.unfairness, p.fidelity) for p in pts if not any(dominates(q, p) for q in pts)}
        assert fr == want
        assert sum(r["on_front"] == "1" for r in sweep) == len(front)


def test_generalize_transfer_rashomon(run):
    for fam in ("adaboost", "rf", "mlp", "gbt"):
        assert len(rows(run / "generalize" / f"{fam}.csv")) == 4
    t = rows(run / "transfer.csv")
    assert len(t) == 16
    for r in t:
        if r["teacher"] == r["student"] and r["blank"] == "0":
            assert float(r["label_agreement"]) == 1.0
    for r in rows(run / "rashomon.csv"):
        if r["fidelity"]:
            assert float(r["min_disp"]) <= float(r["max_disp"])


def test_report_reference_line_matches_perf(run):
    perf = {r["family"]: float(r["sp"]) for r in rows(run / "perf.csv")
            if r["partition"] == "suing"}
    for fam, value in perf.items():
        root = ET.parse(run / "report" / f"pareto_{fam}.svg").getroot()
        ref = [e for e in root.iter(f"{NS}line") if e.get("class") == "reference"]
        assert len(ref) == 1 and float(ref[0].get("data-value")) == value
        n_front = len(rows(run / "attack" / fam / "front.csv"))
        assert len(root.findall(f".//{NS}circle")) == n_front
    assert (run / "report" / "rashomon.svg").is_file()
    assert (run / "report" / "summary.txt").read_text().startswith("metric: sp")


def test_outputs_identical_across_jobs(run, tmp_path):
    other = run_pipeline(tmp_path, jobs=2)
    files = sorted(p.relative_to(run) for p in run.rglob("*")
                   if p.is_file() and p.name != "manifest.json")
    assert files == sorted(p.relative_to(other) for p in other.rglob("*")
                           if p.is_file() and p.name != "manifest.json")
    for f in files:
        assert (run / f).read_bytes() == (other / f).read_bytes(), f
    m1 = json.loads((run / "manifest.json").read_text())
    m2 = json.loads((other / "manifest.json").read_text())
    assert m1["config_hash"] == m2["config_hash"]
    assert m1["commands"]["attack"]["files"] == m2["commands"]["attack"]["files"]


def test_single_point_report(tmp_path):
    out = tmp_path / "r"
    (out / "attack" / "gbt").mkdir(parents=True)
    (out / "perf.csv").write_text("model,family,partition,accuracy,sp,pe,eopp,eodds\n"
                                  "gbt-x,gbt,suing,0.9,0.25,0.1,0.1,0.1\n")
    (out / "attack" / "gbt" / "front.csv").write_text(
        "epsilon,fidelity_sg,unfairness_sg,accuracy_sg,explainer_path\n0.1,0.9,0.08,0.8,e.json\n")
    assert main(["report", "--out", str(out)]) == 0
    svg = (out / "report" / "pareto_gbt.svg").read_text()
    assert svg.count("<circle") == 1


def test_error_paths(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", "--out", str(empty)]) == 2
    assert capsys.readouterr().err.startswith("error:")
    cfg = tmp_path / "c.json"
    missing = tmp_path / "nope.json"
    cfg.write_text(json.dumps({"dataset": {"csv": str(cfg), "schema": str(missing)}}))
    assert main(["split", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert str(missing) in capsys.readouterr().err
    assert main(["split", "--out", str(tmp_path / "o")]) == 2
    assert main(["attack", "--config", str(tmp_path / "absent.json")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert capsys.readouterr().err.startswith("error:")
    # attack before training: missing inputs are a usage error
    cfg.write_text(json.dumps(SMALL))
    assert main(["attack", "--config", str(cfg), "--out", str(tmp_path / "fresh")]) == 2


def test_runtime_failure_exit_code(tmp_path, capsys):
    # a CSV that violates its schema fails at run time with status 3
    data = tmp_path / "d.csv"
    data.write_text("a,g,y\n1,x,1\n2,q,0\n")
    schema = tmp_path / "s.json"
    schema.write_text(json.dumps({
        "columns": [{"name": "a", "kind": "numeric"},
                    {"name": "g", "kind": "binary", "values": ["x", "z"]},
                    {"name": "y", "kind": "binary"}],
        "label_column": "y", "positive_label": "1", "group_column": "g",
        "protected_value": "x"}))
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dataset": {"csv": "d.csv", "schema": "s.json"}}))
    assert main(["split", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert capsys.readouterr().err.startswith("error: UnknownCategoricalValue")


def test_config_hash_ignores_key_order():
    a = {"x": 1, "y": {"b": 2, "a": [1, 2]}}
    b = {"y": {"a": [1, 2], "b": 2}, "x": 1}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({"x": 2, "y": {"b": 2, "a": [1, 2]}})


def test_seed_flag_overrides(tmp_path):
    c = tmp_path / "c.json"
    c.write_text(json.dumps(SMALL))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["split", "--config", str(c), "--out", str(a), "--seed", "1"]) == 0
    assert main(["split", "--config", str(c), "--out", str(b), "--seed", "2"]) == 0
    assert (a / "splits" / "suing_0.csv").read_bytes() != (b / "splits" / "suing_0.csv").read_bytes()
    ha = json.loads((a / "manifest.json").read_text())["config_hash"]
    hb = json.loads((b / "manifest.json").read_text())["config_hash"]
    assert ha != hb
