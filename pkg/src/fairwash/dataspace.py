"""Tabular ingestion: CSV loading, one-hot encoding and the train/suing/test split."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConstantNumericColumn,
    EmptyPartition,
    MissingColumn,
    SchemaError,
    UnknownCategoricalValue,
    UnparseableNumeric,
)

KINDS = ("categorical", "numeric", "binary")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    values: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical" and not self.values:
            raise SchemaError(f"categorical column {self.name!r} must list its values")
        if self.kind == "binary" and self.values and len(self.values) != 2:
            raise SchemaError(f"binary column {self.name!r} needs exactly two values")


@dataclass(frozen=True)
class FeatureSchema:
    columns: tuple[Column, ...]
    label_column: str
    positive_label: str
    group_column: str
    protected_value: str

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        for key in (self.label_column, self.group_column):
            if names.count(key) != 1:
                raise SchemaError(f"{key!r} must appear exactly once in columns")
        if self.label_column == self.group_column:
            raise SchemaError("label and group column must differ")

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def feature_columns(self) -> tuple[Column, ...]:
        skip = {self.label_column, self.group_column}
        return tuple(c for c in self.columns if c.name not in skip)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        cols = tuple(
            Column(c["name"], c["kind"], tuple(str(v) for v in c.get("values", ())))
            for c in d["columns"]
        )
        return cls(
            columns=cols,
            label_column=d["label_column"],
            positive_label=str(d["positive_label"]),
            group_column=d["group_column"],
            protected_value=str(d["protected_value"]),
        )

    @classmethod
    def from_json(cls, path) -> "FeatureSchema":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        cols = []
        for c in self.columns:
            entry = {"name": c.name, "kind": c.kind}
            if c.values:
                entry["values"] = list(c.values)
            cols.append(entry)
        return {
            "columns": cols,
            "label_column": self.label_column,
            "positive_label": self.positive_label,
            "group_column": self.group_column,
            "protected_value": self.protected_value,
        }


@dataclass(frozen=True)
class RawTable:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> list[str]:
        j = self.header.index(name)
        return [r[j] for r in self.rows]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Encoded dataset. ``groups == 0`` marks the protected group.

    ``row_ids`` index rows of the table the dataset was encoded from, and
    ``source`` fingerprints that table; together they let callers check that
    two partitions are disjoint.
    """

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    feature_names: tuple[str, ...]
    schema: FeatureSchema | None = None
    row_ids: np.ndarray | None = None
    source: str = ""
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels).astype(np.int8)
        g = np.asarray(self.groups).astype(np.int8)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        n = X.shape[0]
        if y.shape != (n,) or g.shape != (n,):
            raise ValueError("features, labels and groups must have the same number of rows")
        if X.shape[1] != len(self.feature_names):
            raise ValueError("feature_names length does not match the number of columns")
        if not (np.isin(y, (0, 1)).all() and np.isin(g, (0, 1)).all()):
            raise ValueError("labels and groups must be binary")
        if n and not (np.any(g == 0) and np.any(g == 1)):
            raise ValueError("both group values must occur at least once")
        ids = np.arange(n) if self.row_ids is None else np.asarray(self.row_ids, dtype=np.int64)
        for a in (X, y, g, ids):
            a.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "groups", g)
        object.__setattr__(self, "row_ids", ids)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def fingerprint(self) -> str:
        return schema_fingerprint(self.feature_names)

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            self.features[idx],
            self.labels[idx],
            self.groups[idx],
            self.feature_names,
            self.schema,
            self.row_ids[idx],
            self.source,
            self.notes,
        )

    def to_csv(self, path) -> None:
        """Write the encoded table (row id, features, label, group)."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row_id", *self.feature_names, "label", "group"])
            for i in range(len(self)):
                w.writerow(
                    [int(self.row_ids[i]), *(_fmt(v) for v in self.features[i]),
                     int(self.labels[i]), int(self.groups[i])]
                )

    @classmethod
    def from_encoded_csv(cls, path, source: str = "") -> "Dataset":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        arr = np.array(body, dtype=np.float64).reshape(len(body), len(header))
        return cls(arr[:, 1:-2], arr[:, -2], arr[:, -1], tuple(header[1:-2]),
                   row_ids=arr[:, 0].astype(np.int64), source=source)


def _fmt(v: float) -> str:
    return "1" if v == 1.0 else "0" if v == 0.0 else repr(float(v))


def schema_fingerprint(feature_names: Sequence[str]) -> str:
    h = hashlib.sha256("\x1f".join(feature_names).encode("utf-8"))
    return h.hexdigest()[:16]


def load_csv(path, schema: FeatureSchema) -> RawTable:
    """Read and validate a raw CSV against ``schema``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(h.strip() for h in next(reader))
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        body = [tuple(cell.strip() for cell in r) for r in reader if r]
    for c in schema.columns:
        if c.name not in header:
            raise MissingColumn(c.name)
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise SchemaError(f"row {i}: expected {len(header)} cells, got {len(r)}")
    for c in schema.columns:
        j = header.index(c.name)
        if c.kind == "numeric":
            for i, r in enumerate(body):
                try:
                    v = float(r[j])
                except ValueError:
                    raise UnparseableNumeric(i, c.name, r[j]) from None
                if not math.isfinite(v):
                    raise UnparseableNumeric(i, c.name, r[j])
        elif c.values:
            ok = set(c.values)
            for i, r in enumerate(body):
                if r[j] not in ok:
                    raise UnknownCategoricalValue(i, c.name, r[j])
        else:  # binary without listed values: numeric 0/1
            for i, r in enumerate(body):
                if r[j] not in ("0", "1", "0.0", "1.0"):
                    raise UnknownCategoricalValue(i, c.name, r[j])
    if len(body) < 2:
        raise SchemaError(f"{path}: need at least 2 data rows")
    return RawTable(header, tuple(body))


def _binary_indicator(col: Column, cells: list[str], positive: str | None = None) -> np.ndarray:
    if positive is not None:
        return np.array([c == positive for c in cells], dtype=np.float64)
    if col.values:
        return np.array([c == col.values[1] for c in cells], dtype=np.float64)
    return np.array([float(c) for c in cells], dtype=np.float64)


def encode(raw: RawTable, schema: FeatureSchema) -> Dataset:
    """One-hot encode categoricals, min-max scale numerics, binarize label and group."""
    blocks, names, notes = [], [], []
    for c in schema.feature_columns:
        cells = raw.column(c.name)
        if c.kind == "categorical":
            for v in c.values:
                blocks.append(np.array([x == v for x in cells], dtype=np.float64))
                names.append(f"{c.name}={v}")
        elif c.kind == "binary":
            blocks.append(_binary_indicator(c, cells))
            names.append(c.name)
        else:
            x = np.array([float(v) for v in cells])
            lo, hi = x.min(), x.max()
            if hi > lo:
                blocks.append((x - lo) / (hi - lo))
            else:
                msg = f"numeric column {c.name!r} is constant; emitted as zeros"
                warnings.warn(msg, ConstantNumericColumn, stacklevel=2)
                notes.append(msg)
                blocks.append(np.zeros_like(x))
            names.append(c.name)
    n = len(raw)
    X = np.column_stack(blocks) if blocks else np.zeros((n, 0))
    y = _binary_indicator(schema.column(schema.label_column), raw.column(schema.label_column),
                          schema.positive_label)
    # protected value -> G = 0
    g = 1.0 - _binary_indicator(schema.column(schema.group_column),
                                raw.column(schema.group_column), schema.protected_value)
    digest = hashlib.sha256()
    for r in raw.rows:
        digest.update("\x1f".join(r).encode("utf-8") + b"\n")
    return Dataset(X, y, g, tuple(names), schema, np.arange(n), digest.hexdigest()[:16],
                   tuple(notes))


def load_dataset(csv_path, schema_path) -> Dataset:
    schema = FeatureSchema.from_json(schema_path)
    return encode(load_csv(csv_path, schema), schema)


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.67, 0.165, 0.165)
    seed: int = 0
    n_resamples: int = 10

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ValueError("ratios must be three positive fractions")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError("ratios must sum to 1")
        if self.n_resamples < 1:
            raise ValueError("n_resamples must be >= 1")


def split_sizes(n: int, ratios) -> tuple[int, int, int]:
    n_sg = int(math.floor(n * ratios[1] + 1e-9))
    n_te = int(math.floor(n * ratios[2] + 1e-9))
    return n - n_sg - n_te, n_sg, n_te


def split(data: Dataset, spec: SplitSpec = SplitSpec(), resample_index: int = 0):
    """Shuffle keyed by ``(seed, resample_index)`` and cut into train, suing group, test."""
    if not 0 <= resample_index < spec.n_resamples:
        raise ValueError(f"resample_index must be in [0, {spec.n_resamples})")
    n = len(data)
    n_tr, n_sg, _ = split_sizes(n, spec.ratios)
    perm = np.random.default_rng([spec.seed, resample_index]).permutation(n)
    parts = (perm[:n_tr], perm[n_tr:n_tr + n_sg], perm[n_tr + n_sg:])
    out = []
    for name, idx in zip(("train", "suing", "test"), parts):
        idx = np.sort(idx)
        g, y = data.groups[idx], data.labels[idx]
        if len(np.unique(g)) < 2 or len(np.unique(y)) < 2:
            raise EmptyPartition(f"{name} partition lacks a group or label value")
        out.append(data.take(idx))
    return tuple(out)


def synth_generate(n: int, n_features: int = 10, bias: float = 0.3, seed: int = 0) -> Dataset:
    """Binary-feature dataset with P(Y=1|G=0) - P(Y=1|G=1) close to ``bias``.

    Labels are drawn per group first; features are then drawn conditionally on
    the label (signal columns) or on the group (proxy columns), plus noise.
    """
    if n < 20:
        raise ValueError("n must be >= 20")
    if not 0.0 <= bias <= 1.0:
        raise ValueError("bias must be in [0, 1]")
    n_features = max(int(n_features), 2)
    rng = np.random.default_rng(seed)
    # exactly balanced groups in random order
    g = rng.permutation(np.arange(n) % 2)
    rate = 0.5 + np.where(g == 0, bias / 2, -bias / 2)
    y = (rng.random(n) < rate).astype(np.int8)
    n_signal = max(1, n_features // 2)
    n_proxy = max(1, n_features // 4)
    n_noise = n_features - n_signal - n_proxy
    strength = np.linspace(0.35, 0.15, n_signal)
    p_signal = 0.5 + np.outer(2 * y - 1, strength)
    # group leakage into the proxy columns grows with the disparity strength
    p_proxy = np.repeat((0.5 + 0.5 * bias * (1 - 2 * g))[:, None], n_proxy, axis=1)
    p_noise = np.full((n, n_noise), 0.5)
    P = np.hstack([p_signal, p_proxy, p_noise])
    X = (rng.random(P.shape) < P).astype(np.float64)
    names = ([f"s{j}" for j in range(n_signal)] + [f"p{j}" for j in range(n_proxy)]
             + [f"z{j}" for j in range(n_noise)])
    src = f"synth:{n}:{n_features}:{bias!r}:{seed}"
    return Dataset(X, y, g, tuple(names), None, np.arange(n), src)
