"""A small fairwashing run on synthetic data, printed step by step.

    python3 demos/walkthrough.py [output.svg]

Trains an unfair black-box, sweeps the fairness bound for a logistic
explainer, checks that the fairer explainers still hold on held-out data,
fits one fairwashed rule list and measures how wide the disparity range is
among models that agree with the black-box 95% of the time.
"""

import sys

from fairwash.attack import fairwash, make_suing_instance, pareto_sweep
from fairwash.blackbox import train
from fairwash.dataspace import SplitSpec, split, synth_generate
from fairwash.evaluation import generalization_report
from fairwash.metrics import accuracy, unfairness
from fairwash.rashomon import unfairness_range
from fairwash.svg import pareto_svg

data = synth_generate(10000, n_features=10, bias=0.3, seed=0)
train_set, suing, test = split(data, SplitSpec(), 0)
print(f"data: {len(train_set)} train / {len(suing)} suing / {len(test)} test rows")

bb = train("gbt", train_set, {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1})
inst = make_suing_instance(bb, suing)
bb_unf = unfairness(inst.bb_labels, inst.labels, inst.groups, "sp")
print(f"black-box: accuracy {accuracy(inst.bb_labels, inst.labels):.3f}, "
      f"statistical parity gap {bb_unf:.3f}")

grid = [0.01, 0.02, 0.03, 0.05, 0.08, 0.1, 0.15, 0.2, 0.3]
front = pareto_sweep(inst, "logistic", "sp", grid)
print("\nPareto front (unfairness, fidelity):")
for p in front.points:
    print(f"  eps {p.epsilon:.2f}: unfairness {p.unfairness:.3f}  fidelity {p.fidelity:.3f}")

gaps = generalization_report(front, bb, test, "sp", suing)
print(f"\ntest set: mean fidelity gap {gaps.mean_fidelity_gap:.4f}, "
      f"mean unfairness gap {gaps.mean_unfairness_gap:.4f}")

rl = fairwash(inst, "rulelist", "sp", 0.05)
print(f"\nrule list at eps 0.05: fidelity {rl.fidelity:.3f}, unfairness {rl.unfairness:.3f}")
print("  " + rl.explainer.render().replace("\n", "\n  "))

curve = unfairness_range("logistic", suing.features, inst.bb_labels, suing.labels,
                         suing.groups, "sp", fidelity_grid=[0.95])
row = curve.rows[0]
print(f"\nlogistic models with fidelity >= 0.95 span disparity "
      f"[{row.min_disparity:+.3f}, {row.max_disparity:+.3f}] "
      f"(black-box {curve.blackbox_disparity:+.3f})")

if len(sys.argv) > 1:
    svg = pareto_svg([("gbt", [(p.unfairness, p.fidelity) for p in front.points], bb_unf)],
                     title="logistic explainer of gbt, statistical parity")
    with open(sys.argv[1], "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(f"\nwrote {sys.argv[1]}")
