"""Fairwashing attacks on group fairness: black-boxes, constrained explainers and their analysis."""

__version__ = "0.1.0"

from .dataspace import Dataset, FeatureSchema, SplitSpec, load_dataset, split, synth_generate
from .metrics import FairnessMetricId, fairness_report, fidelity, unfairness

__all__ = [
    "Dataset", "FairnessMetricId", "FeatureSchema", "SplitSpec", "__version__",
    "fairness_report", "fidelity", "load_dataset", "split", "synth_generate", "unfairness",
]
