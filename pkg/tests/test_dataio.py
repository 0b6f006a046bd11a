import json
import logging

import numpy as np
import pytest

from igattack.dataio import (
    DataError,
    Dataset,
    DimensionError,
    FormatVersionError,
    ModelFileError,
    TrainingError,
    TruncatedPayloadError,
    dumps_model,
    load_csv,
    load_model,
    loads_model,
    read_records,
    save_model,
    synth_blobs,
    train_mlp,
    train_test_split,
    write_csv,
    write_records,
    write_schema,
)
from igattack.dataio.modelfile import model_to_document
from igattack.nncore import forward_logits, random_mlp

CSV = """duration,protocol,bytes,attack
1.5,tcp,100,normal
3.0,udp,300,dos
0.0,tcp,200,normal
6.0,icmp,0,probe
"""
SCHEMA = {"label": "attack", "columns": [{"name": "protocol", "kind": "categorical"}]}


@pytest.fixture
def toy(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text(CSV)
    write_schema(SCHEMA, str(path) + ".schema.json")
    return path


def test_load_scales_and_encodes(toy):
    ds = load_csv(toy)
    assert ds.feature_names == ("duration", "protocol=tcp", "protocol=udp", "protocol=icmp", "bytes")
    np.testing.assert_array_equal(ds.features[:, 0], [0.25, 0.5, 0.0, 1.0])
    np.testing.assert_array_equal(ds.features[:, 4], [1 / 3, 1.0, 2 / 3, 0.0])
    assert ds.features[:, 1:4].sum(axis=1).tolist() == [1.0] * 4
    assert ds.classes == ("normal", "dos", "probe") and ds.labels.tolist() == [0, 1, 0, 2]
    assert ds.schema["columns"][0]["max"] == 6.0


def test_fitted_schema_reused_for_test_split(toy, tmp_path):
    train = load_csv(toy)
    other = tmp_path / "test.csv"
    other.write_text("duration,protocol,bytes,attack\n12.0,udp,150,dos\n")
    ds = load_csv(other, train.schema)
    assert ds.features[0].tolist() == [1.0, 0.0, 1.0, 0.0, 0.5]
    assert ds.labels.tolist() == [1]


def test_constant_column_warns(tmp_path, caplog):
    path = tmp_path / "c.csv"
    path.write_text("a,b,y\n1,5,x\n2,5,z\n")
    with caplog.at_level(logging.WARNING):
        ds = load_csv(path, {"label": "y"})
    assert ds.features[:, 1].tolist() == [0.0, 0.0]
    assert "zero range" in caplog.text


def test_unknown_category_rejected(toy, tmp_path):
    train = load_csv(toy)
    other = tmp_path / "bad.csv"
    other.write_text("duration,protocol,bytes,attack\n1,sctp,1,dos\n")
    with pytest.raises(DataError, match="unknown category 'sctp'"):
        load_csv(other, train.schema)


@pytest.mark.parametrize("text, pattern", [
    ("a,y\nfoo,x\n", "non-numeric"),
    ("a,y\nnan,x\n", "non-finite"),
    ("a,y\n1,x,3\n", "expected 2 cells"),
    ("a,b\n1,2\n", "label column"),
    ("", "empty"),
])
def test_malformed_csv(tmp_path, text, pattern):
    path = tmp_path / "m.csv"
    path.write_text(text)
    with pytest.raises(DataError, match=pattern):
        load_csv(path, {"label": "y"})


def test_missing_sidecar(tmp_path):
    path = tmp_path / "n.csv"
    path.write_text("a,y\n1,x\n")
    with pytest.raises(DataError, match="sidecar"):
        load_csv(path)


def test_dataset_invariant():
    with pytest.raises(DataError):
        Dataset(np.array([[1.5]]), np.array([0]), ("a",))
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), np.array([0]), ("a",))


def test_csv_roundtrip(tmp_path):
    ds = synth_blobs(seed=3, n_samples=50, n_features=6, n_classes=3)
    path = tmp_path / "blobs.csv"
    write_csv(ds, path)
    back = load_csv(path)
    assert np.max(np.abs(back.features - ds.features)) <= 1e-12
    assert back.labels.tolist() == ds.labels.tolist() and back.feature_names == ds.feature_names


def test_blobs_determinism_and_balance():
    a = synth_blobs(seed=11, n_samples=100, n_features=4, n_classes=4)
    b = synth_blobs(seed=11, n_samples=100, n_features=4, n_classes=4)
    assert a.features.tobytes() == b.features.tobytes() and a.labels.tolist() == b.labels.tolist()
    assert np.bincount(a.labels).tolist() == [25] * 4
    assert a.features.min() >= 0 and a.features.max() <= 1


def test_blobs_tiny_spread_collapses_to_centers():
    ds = synth_blobs(seed=2, n_samples=40, n_features=5, n_classes=2, spread=1e-12)
    for c in range(2):
        rows = ds.features[ds.labels == c]
        assert np.ptp(rows, axis=0).max() <= 1e-10


def test_split_partitions():
    ds = synth_blobs(seed=1, n_samples=100, n_features=3, n_classes=2)
    train, test = train_test_split(ds, 0.25, seed=0)
    assert len(train) == 75 and len(test) == 25
    rows = {r.tobytes() for r in train.features} | {r.tobytes() for r in test.features}
    assert len(rows) == 100


# ---- model files ----

@pytest.mark.parametrize("encoding", ["decimal", "base64-f64le"])
def test_model_roundtrip_bit_identical(tmp_path, encoding):
    rng = np.random.default_rng(4)
    model = random_mlp(rng, [7, 9, 5, 3])
    path = tmp_path / "m.json"
    save_model(model, path, encoding)
    back = load_model(path)
    X = rng.random((100, 7))
    assert forward_logits(back, X).tobytes() == forward_logits(model, X).tobytes()
    save_model(back, tmp_path / "m2.json", encoding)
    assert (tmp_path / "m2.json").read_bytes() == path.read_bytes()


def test_trained_model_with_preprocessing_roundtrips():
    ds = synth_blobs(seed=5, n_samples=100, n_features=4, n_classes=2)
    model = train_mlp(ds, [6, 2], epochs=1).model
    back = loads_model(dumps_model(model))
    assert back.preprocessing is not None
    assert forward_logits(back, ds.features).tobytes() == forward_logits(model, ds.features).tobytes()


def test_corrupt_dims_rejected():
    model = random_mlp(np.random.default_rng(0), [3, 4, 2])
    doc = model_to_document(model)
    doc["layers"][0]["out_dim"] = 5
    with pytest.raises(DimensionError):
        loads_model(json.dumps(doc))
    doc = model_to_document(model, "base64-f64le")
    doc["layers"][1]["in_dim"] = 3
    with pytest.raises(DimensionError):
        loads_model(json.dumps(doc))


def test_version_mismatch():
    doc = model_to_document(random_mlp(np.random.default_rng(0), [3, 2]))
    doc["format_version"] = 2
    with pytest.raises(FormatVersionError):
        loads_model(json.dumps(doc))


def test_truncated_payloads():
    model = random_mlp(np.random.default_rng(0), [3, 4, 2])
    text = dumps_model(model)
    with pytest.raises(TruncatedPayloadError):
        loads_model(text[: len(text) // 2])
    doc = model_to_document(model, "base64-f64le")
    doc["layers"][0]["weights"] = doc["layers"][0]["weights"][:16]
    with pytest.raises(TruncatedPayloadError):
        loads_model(json.dumps(doc))


def test_not_a_model():
    with pytest.raises(ModelFileError):
        loads_model('{"format": "other"}')
    with pytest.raises(ModelFileError):
        loads_model("{,}")


# ---- training ----

def test_zero_epochs_returns_initialization():
    ds = synth_blobs(seed=5, n_samples=60, n_features=4, n_classes=3)
    a = train_mlp(ds, [8, 3], epochs=0, seed=9).model
    b = train_mlp(ds, [8, 3], epochs=0, seed=9).model
    limit = np.sqrt(6.0 / 4)
    W0 = np.random.default_rng(9).uniform(-limit, limit, size=(8, 4))
    assert a.layers[0].weights.tobytes() == W0.tobytes()
    assert not np.any(a.layers[0].biases)
    assert dumps_model(a) == dumps_model(b)


def test_separable_blobs_train_fast():
    ds = synth_blobs(seed=8, n_samples=400, n_features=10, n_classes=2)
    result = train_mlp(ds, [16, 2], epochs=20, seed=0)
    assert result.train_accuracy >= 0.99


def test_training_is_deterministic():
    ds = synth_blobs(seed=8, n_samples=200, n_features=5, n_classes=3)
    a = train_mlp(ds, [8, 3], epochs=3, seed=1)
    b = train_mlp(ds, [8, 3], epochs=3, seed=1)
    assert dumps_model(a.model, "base64-f64le") == dumps_model(b.model, "base64-f64le")
    assert a.final_loss == b.final_loss


def test_training_validation():
    ds = synth_blobs(seed=8, n_samples=20, n_features=3, n_classes=2)
    with pytest.raises(ValueError):
        train_mlp(ds, [4, 3])
    with pytest.raises(TrainingError):
        train_mlp(ds, [4, 2], epochs=5, lr=1e300)


# ---- reports ----

def test_report_lines_roundtrip(tmp_path):
    path = tmp_path / "r.jsonl"
    write_records(path, [{"a": 0.1, "b": None}])
    write_records(path, [{"a": float("nan")}], append=True)
    recs = read_records(path)
    assert recs[0]["a"] == 0.1 and recs[0]["b"] is None and recs[1]["a"] is None
    assert path.read_text().splitlines()[0].startswith('{"a":0.1,"b":null,"format":"igattack-report"')
