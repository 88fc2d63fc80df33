import json
import warnings

import numpy as np
import pytest

from fairwash.dataspace import (Dataset, FeatureSchema, SplitSpec, encode, load_csv,
                                load_dataset, split, split_sizes, synth_generate)
from fairwash.errors import (ConstantNumericColumn, EmptyPartition, MissingColumn,
                             SchemaError, UnknownCategoricalValue, UnparseableNumeric)

COMPAS_LIKE = {
    "columns": [
        {"name": "age", "kind": "numeric"},
        {"name": "charge", "kind": "categorical", "values": ["F", "M", "O"]},
        {"name": "race", "kind": "binary", "values": ["African-American", "Caucasian"]},
        {"name": "recid", "kind": "binary"},
    ],
    "label_column": "recid",
    "positive_label": "1",
    "group_column": "race",
    "protected_value": "African-American",
}


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


@pytest.fixture
def schema():
    return FeatureSchema.from_dict(COMPAS_LIKE)


def test_load_three_rows(tmp_path, schema):
    p = write(tmp_path, "c.csv", "age,charge,race,recid\n"
              "20,F,African-American,1\n40,M,Caucasian,0\n60,O,Caucasian,1\n")
    raw = load_csv(p, schema)
    assert len(raw) == 3


def test_missing_group_column(tmp_path, schema):
    p = write(tmp_path, "c.csv", "age,charge,recid\n20,F,1\n40,M,0\n")
    with pytest.raises(MissingColumn):
        load_csv(p, schema)


def test_unknown_category(tmp_path, schema):
    p = write(tmp_path, "c.csv", "age,charge,race,recid\n20,F,Other,1\n40,M,Caucasian,0\n")
    with pytest.raises(UnknownCategoricalValue) as exc:
        load_csv(p, schema)
    assert exc.value.row == 0 and exc.value.column == "race"


def test_unparseable_numeric(tmp_path, schema):
    p = write(tmp_path, "c.csv", "age,charge,race,recid\nold,F,Caucasian,1\n40,M,Caucasian,0\n")
    with pytest.raises(UnparseableNumeric):
        load_csv(p, schema)


def test_encode_one_hot_and_scaling(tmp_path, schema):
    p = write(tmp_path, "c.csv", "age,charge,race,recid\n2,F,African-American,1\n"
              "4,M,Caucasian,0\n6,O,Caucasian,1\n4,F,African-American,0\n")
    d = encode(load_csv(p, schema), schema)
    assert d.feature_names == ("age", "charge=F", "charge=M", "charge=O")
    assert d.features[:, 0].tolist() == [0.0, 0.5, 1.0, 0.5]
    assert d.features[:, 1:].sum(axis=1).tolist() == [1.0] * 4
    assert d.labels.tolist() == [1, 0, 1, 0]
    assert d.groups.tolist() == [0, 1, 1, 0]  # protected value -> G=0


def test_constant_numeric_column(tmp_path, schema):
    p = write(tmp_path, "c.csv", "age,charge,race,recid\n3,F,African-American,1\n"
              "3,M,Caucasian,0\n")
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        d = encode(load_csv(p, schema), schema)
    assert any(issubclass(x.category, ConstantNumericColumn) for x in w)
    assert d.features[:, 0].tolist() == [0.0, 0.0]
    assert d.notes


def test_schema_json_round_trip(tmp_path, schema):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(schema.to_dict()))
    assert FeatureSchema.from_json(p) == schema
    bad = dict(COMPAS_LIKE, label_column="nope")
    with pytest.raises(SchemaError):
        FeatureSchema.from_dict(bad)


def test_load_dataset(tmp_path):
    p = write(tmp_path, "c.csv", "age,charge,race,recid\n2,F,African-American,1\n"
              "4,M,Caucasian,0\n")
    s = tmp_path / "s.json"
    s.write_text(json.dumps(COMPAS_LIKE))
    d = load_dataset(p, s)
    assert len(d) == 2 and d.source


def test_bundled_schemas_parse():
    from importlib.resources import files
    for name, n in (("compas", 8), ("adult", 11)):
        s = FeatureSchema.from_json(files("fairwash") / "schemas" / f"{name}.json")
        assert len(s.feature_columns) == n


def test_split_sizes_and_partition():
    assert split_sizes(1000, (0.67, 0.165, 0.165)) == (670, 165, 165)
    d = synth_generate(1000, 6, 0.3, 1)
    tr, sg, te = split(d, SplitSpec(), 0)
    assert (len(tr), len(sg), len(te)) == (670, 165, 165)
    ids = np.concatenate([tr.row_ids, sg.row_ids, te.row_ids])
    assert sorted(ids.tolist()) == list(range(1000))
    again = split(d, SplitSpec(), 0)
    assert all(np.array_equal(a.row_ids, b.row_ids) for a, b in zip((tr, sg, te), again))
    other = split(d, SplitSpec(), 1)
    assert not np.array_equal(sg.row_ids, other[1].row_ids)
    with pytest.raises(ValueError):
        split(d, SplitSpec(n_resamples=2), 2)


def test_split_empty_partition():
    X = np.zeros((30, 1))
    y = np.array([1] * 29 + [0])
    g = np.array([0, 1] * 15)
    d = Dataset(X, y, g, ("x",))
    with pytest.raises(EmptyPartition):
        split(d, SplitSpec(), 0)


def test_split_spec_defaults():
    s = SplitSpec()
    assert s.ratios == (0.67, 0.165, 0.165) and s.n_resamples == 10
    with pytest.raises(ValueError):
        SplitSpec(ratios=(0.5, 0.5, 0.5))


def gap(d):
    return d.labels[d.groups == 0].mean() - d.labels[d.groups == 1].mean()


def test_synth_bias():
    assert abs(gap(synth_generate(10000, 10, 0.0, 0))) <= 0.05
    assert abs(gap(synth_generate(10000, 10, 0.4, 0)) - 0.4) <= 0.05
    a, b = synth_generate(500, 8, 0.2, 3), synth_generate(500, 8, 0.2, 3)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)
    assert set(np.unique(a.features)) <= {0.0, 1.0}
    with pytest.raises(ValueError):
        synth_generate(10)


def test_dataset_csv_round_trip(tmp_path):
    d = synth_generate(100, 4, 0.2, 0)
    p = tmp_path / "d.csv"
    d.to_csv(p)
    e = Dataset.from_encoded_csv(p)
    assert np.array_equal(d.features, e.features)
    assert np.array_equal(d.labels, e.labels) and np.array_equal(d.row_ids, e.row_ids)
    assert d.fingerprint == e.fingerprint
