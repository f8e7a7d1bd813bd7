import struct

import numpy as np
import pytest

from demian import (Demian, EmbeddingSet, LinearCCA, load_checkpoint, load_matrix,
                    save_checkpoint, save_embeddings, save_matrix,
                    synth_rotation_dataset, write_metrics)
from demian.serialize import (METRICS_HEADER, save_matrix_text, write_history,
                              write_summary)


# ------------------------------------------------------------ matrix blocks

def test_matrix_round_trip(tmp_path, rng):
    m = rng.standard_normal((7, 3))
    save_matrix(tmp_path / "m.emb", m)
    assert np.array_equal(load_matrix(tmp_path / "m.emb"), m)


def test_matrix_layout_is_documented_bytes(tmp_path):
    m = np.array([[1.5, -2.0]])
    save_matrix(tmp_path / "m.emb", m)
    raw = (tmp_path / "m.emb").read_bytes()
    rows, cols = struct.unpack("<QQ", raw[:16])
    assert (rows, cols) == (1, 2)
    assert raw[16:] == struct.pack("<dd", 1.5, -2.0)
    assert len(raw) == 16 + 16


def test_matrix_zero_columns(tmp_path):
    save_matrix(tmp_path / "m.emb", np.empty((4, 0)))
    out = load_matrix(tmp_path / "m.emb")
    assert out.shape == (4, 0)


def test_matrix_truncated_file(tmp_path):
    save_matrix(tmp_path / "m.emb", np.ones((2, 2)))
    raw = (tmp_path / "m.emb").read_bytes()
    (tmp_path / "short.emb").write_bytes(raw[:-5])
    with pytest.raises(ValueError, match="truncated"):
        load_matrix(tmp_path / "short.emb")


def test_matrix_text_export(tmp_path, rng):
    m = rng.standard_normal((3, 4))
    save_matrix_text(tmp_path / "m.txt", m)
    assert np.allclose(np.loadtxt(tmp_path / "m.txt"), m, rtol=0, atol=0)


# -------------------------------------------------------------- embeddings

def test_save_embeddings_writes_views(tmp_path, rng):
    emb = EmbeddingSet(x=rng.standard_normal((5, 2)), y=rng.standard_normal((5, 2)),
                       split_tag="test")
    paths = save_embeddings(tmp_path, emb)
    assert sorted(p.name for p in paths) == ["test_x.emb", "test_y.emb"]
    assert np.array_equal(load_matrix(tmp_path / "test_x.emb"), emb.x)


def test_save_embeddings_single_view_text(tmp_path, rng):
    emb = EmbeddingSet(x=rng.standard_normal((4, 3)), split_tag="train")
    paths = save_embeddings(tmp_path, emb, fmt="text")
    assert [p.name for p in paths] == ["train_x.txt"]


# -------------------------------------------------------------- checkpoints

def fitted_demian():
    data = synth_rotation_dataset(256, d=4, angle=30.0, seed=0)
    model = Demian(n_components=3, hidden_units=(8,), activation="elu",
                   batch_size=64, n_epochs=2, random_state=1)
    return model.fit(data.x, data.y), data


def test_demian_checkpoint_round_trip(tmp_path):
    model, data = fitted_demian()
    save_checkpoint(tmp_path / "ck.demian", model)
    loaded = load_checkpoint(tmp_path / "ck.demian")
    fx0, fy0 = model.transform(data.x, data.y)
    fx1, fy1 = loaded.transform(data.x, data.y)
    assert np.array_equal(fx0, fx1)
    assert np.array_equal(fy0, fy1)
    assert loaded.get_params() == model.get_params()


def test_demian_checkpoint_preserves_discriminator(tmp_path):
    model, _ = fitted_demian()
    save_checkpoint(tmp_path / "ck.demian", model)
    loaded = load_checkpoint(tmp_path / "ck.demian")
    for a, b in zip(model.discriminator_.params(), loaded.discriminator_.params()):
        assert np.array_equal(a.value, b.value)


def test_cca_checkpoint_round_trip(tmp_path, rng):
    x = rng.standard_normal((200, 5))
    y = x @ rng.standard_normal((5, 4)) + rng.standard_normal((200, 4))
    model = LinearCCA(n_components=3).fit(x, y)
    save_checkpoint(tmp_path / "ck.cca", model)
    loaded = load_checkpoint(tmp_path / "ck.cca")
    assert np.array_equal(model.correlations_, loaded.correlations_)
    fx0, fy0 = model.transform(x, y)
    fx1, fy1 = loaded.transform(x, y)
    assert np.array_equal(fx0, fx1) and np.array_equal(fy0, fy1)


def test_checkpoint_rejects_unfitted(tmp_path):
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        save_checkpoint(tmp_path / "ck", Demian())


def test_checkpoint_bad_magic(tmp_path):
    (tmp_path / "junk").write_bytes(b"NOTACKPT" + b"\x00" * 32)
    with pytest.raises(ValueError, match="magic"):
        load_checkpoint(tmp_path / "junk")


# ------------------------------------------------------------------ metrics

def test_metrics_header_and_rows(tmp_path):
    rows = [
        {"metric": "srl_accuracy", "split": "test", "train_modality": "x",
         "test_modality": "y", "value": 0.8125, "seed": 3},
        {"metric": "top50_correlation", "split": "test", "train_modality": "x",
         "test_modality": "y", "value": 41.0, "seed": 3},
    ]
    write_metrics(tmp_path / "metrics.csv", rows)
    lines = (tmp_path / "metrics.csv").read_text().splitlines()
    assert lines[0] == METRICS_HEADER
    assert lines[1] == "srl_accuracy,test,x,y,0.8125,3"
    assert lines[2] == "top50_correlation,test,x,y,41.0,3"


def test_metrics_rewrite_is_byte_identical(tmp_path):
    rows = [{"metric": "m", "split": "s", "train_modality": "x",
             "test_modality": "y", "value": 1.0 / 3.0, "seed": 0}]
    write_metrics(tmp_path / "a.csv", rows)
    write_metrics(tmp_path / "b.csv", rows)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_history_table(tmp_path):
    write_history(tmp_path / "h.csv", {"loss": [1.0, 0.5], "acc": [0.3, 0.6]})
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "epoch,loss,acc"
    assert lines[1] == "0,1.0,0.3"
    assert lines[2] == "1,0.5,0.6"


def test_summary_is_sorted_json(tmp_path):
    write_summary(tmp_path / "s.json", {"b": 1, "a": {"z": 2, "y": 3}})
    text = (tmp_path / "s.json").read_text()
    assert text.index('"a"') < text.index('"b"')
    import json

    assert json.loads(text) == {"b": 1, "a": {"z": 2, "y": 3}}
