"""On-disk formats: embedding matrices, model checkpoints, metrics tables.

Matrix block layout (also used for every parameter block in checkpoints):

    8 bytes  row count, little-endian unsigned
    8 bytes  column count, little-endian unsigned
    rows * cols * 8 bytes of float64 values, row-major, little-endian

Checkpoint layout:

    8 bytes  magic ``DMIACKP1``
    8 bytes  header length, little-endian unsigned
    UTF-8 JSON header: {"kind", "params", "layers"/"arrays", ...}
    matrix blocks, in the order the header lists them

The metrics table is a plain CSV with the fixed header
``metric,split,train_modality,test_modality,value,seed``; float values are
written with ``repr`` so reruns are byte-identical.
"""

import json
import struct

import numpy as np

from .cca import LinearCCA
from .model import Demian
from .nn import ELU, BatchNorm, Dense, Network, ReLU

CHECKPOINT_MAGIC = b"DMIACKP1"
METRICS_HEADER = "metric,split,train_modality,test_modality,value,seed"


def write_matrix(fh, m):
    m = np.ascontiguousarray(np.atleast_2d(np.asarray(m, dtype=np.float64)))
    fh.write(struct.pack("<QQ", m.shape[0], m.shape[1]))
    fh.write(m.astype("<f8", copy=False).tobytes())


def read_matrix(fh):
    head = fh.read(16)
    if len(head) != 16:
        raise ValueError(f"truncated matrix block: expected 16 header bytes, found {len(head)}")
    rows, cols = struct.unpack("<QQ", head)
    payload = fh.read(rows * cols * 8)
    if len(payload) != rows * cols * 8:
        raise ValueError(
            f"truncated matrix block: expected {rows * cols * 8} data bytes, found {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()


def save_matrix(path, m):
    with open(path, "wb") as fh:
        write_matrix(fh, m)


def load_matrix(path):
    with open(path, "rb") as fh:
        return read_matrix(fh)


def save_matrix_text(path, m):
    np.savetxt(path, np.atleast_2d(np.asarray(m, dtype=np.float64)), fmt="%.17g")


def save_embeddings(directory, emb, fmt="binary"):
    """Write the available views of an EmbeddingSet; returns written paths."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for modality in ("x", "y"):
        values = getattr(emb, modality)
        if values is None:
            continue
        stem = f"{emb.split_tag or 'data'}_{modality}"
        if fmt == "binary":
            path = directory / f"{stem}.emb"
            save_matrix(path, values)
        elif fmt == "text":
            path = directory / f"{stem}.txt"
            save_matrix_text(path, values)
        else:
            raise ValueError(f"unknown embedding format {fmt!r}, expected 'binary' or 'text'")
        written.append(path)
    return written


def _layer_spec(layer):
    if isinstance(layer, Dense):
        return {"type": "dense", "in": layer.in_width, "out": layer.out_width}, ["W", "b"]
    if isinstance(layer, ReLU):
        return {"type": "relu"}, []
    if isinstance(layer, ELU):
        return {"type": "elu", "alpha": layer.alpha}, []
    if isinstance(layer, BatchNorm):
        return (
            {"type": "batchnorm", "width": layer.width, "momentum": layer.momentum,
             "eps": layer.eps},
            ["gamma", "beta", "running_mean", "running_var"],
        )
    raise TypeError(f"cannot serialize layer of type {type(layer).__name__}")


def _layer_blocks(layer, names):
    out = []
    for name in names:
        value = getattr(layer, name)
        out.append(value.value if hasattr(value, "value") else value)
    return out


def _build_layer(spec):
    kind = spec["type"]
    if kind == "dense":
        return Dense(spec["in"], spec["out"], rng=np.random.default_rng(0))
    if kind == "relu":
        return ReLU()
    if kind == "elu":
        return ELU(spec["alpha"])
    if kind == "batchnorm":
        return BatchNorm(spec["width"], spec["momentum"], spec["eps"])
    raise ValueError(f"unknown layer type {kind!r} in checkpoint")


def _restore_layer(layer, names, blocks):
    for name, block in zip(names, blocks):
        current = getattr(layer, name)
        if hasattr(current, "value"):
            if current.value.shape != block.shape:
                raise ValueError(
                    f"checkpoint block for {name} has shape {block.shape}, "
                    f"layer expects {current.value.shape}"
                )
            current.value = block
            current.grad = np.zeros_like(block)
        else:
            setattr(layer, name, block.ravel())


_BLOCK_NAMES = {"dense": ["W", "b"],
                "batchnorm": ["gamma", "beta", "running_mean", "running_var"]}


def _network_header(net):
    return [_layer_spec(layer)[0] for layer in net.layers]


def _network_blocks(net):
    blocks = []
    for layer in net.layers:
        _, names = _layer_spec(layer)
        blocks.extend(_layer_blocks(layer, names))
    return blocks


def _restore_network(specs, block_iter):
    layers = []
    for spec in specs:
        layer = _build_layer(spec)
        names = _BLOCK_NAMES.get(spec["type"], [])
        _restore_layer(layer, names, [next(block_iter) for _ in names])
        layers.append(layer)
    return Network(layers)


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def save_checkpoint(path, model):
    """Serialize a fitted Demian or LinearCCA model to one binary file."""
    if isinstance(model, Demian):
        model._require_fitted()
        header = {
            "kind": "demian",
            "params": {k: _jsonable(v) for k, v in model.get_params().items()},
            "networks": {
                "generator_x": _network_header(model.generator_x_),
                "generator_y": _network_header(model.generator_y_),
                "discriminator": _network_header(model.discriminator_),
            },
            "n_features": [model.n_features_x_, model.n_features_y_],
        }
        blocks = (_network_blocks(model.generator_x_)
                  + _network_blocks(model.generator_y_)
                  + _network_blocks(model.discriminator_))
    elif isinstance(model, LinearCCA):
        model._require_fitted()
        header = {
            "kind": "cca",
            "params": {k: _jsonable(v) for k, v in model.get_params().items()},
            "arrays": ["x_weights", "y_weights", "x_mean", "y_mean", "correlations"],
        }
        blocks = [model.x_weights_, model.y_weights_, model.x_mean_,
                  model.y_mean_, model.correlations_]
    else:
        raise TypeError(f"cannot checkpoint object of type {type(model).__name__}")
    payload = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)
        for block in blocks:
            write_matrix(fh, block)


def load_checkpoint(path):
    """Rebuild the model stored by :func:`save_checkpoint`."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file: expected magic {CHECKPOINT_MAGIC!r}, found {magic!r}")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode())
        blocks = []
        while True:
            probe = fh.read(1)
            if not probe:
                break
            fh.seek(-1, 1)
            blocks.append(read_matrix(fh))
    block_iter = iter(blocks)
    if header["kind"] == "demian":
        params = dict(header["params"])
        for key in ("hidden_units", "disc_hidden_units"):
            params[key] = tuple(params[key])
        model = Demian(**params)
        model.generator_x_ = _restore_network(header["networks"]["generator_x"], block_iter)
        model.generator_y_ = _restore_network(header["networks"]["generator_y"], block_iter)
        model.discriminator_ = _restore_network(header["networks"]["discriminator"], block_iter)
        model.n_features_x_, model.n_features_y_ = header["n_features"]
        model.history_ = {}
        model.prior_ = None
        return model
    if header["kind"] == "cca":
        model = LinearCCA(**header["params"])
        model.x_weights_ = next(block_iter)
        model.y_weights_ = next(block_iter)
        model.x_mean_ = next(block_iter).ravel()
        model.y_mean_ = next(block_iter).ravel()
        model.correlations_ = next(block_iter).ravel()
        return model
    raise ValueError(f"unknown checkpoint kind {header['kind']!r}")


def _format_value(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_metrics(path, rows):
    """Write metric rows as CSV with the fixed six-column header.

    Each row is a mapping with keys metric, split, train_modality,
    test_modality, value, seed (missing entries become empty fields).
    """
    lines = [METRICS_HEADER]
    for row in rows:
        lines.append(",".join([
            str(row.get("metric", "")),
            str(row.get("split", "")),
            str(row.get("train_modality", "")),
            str(row.get("test_modality", "")),
            _format_value(row.get("value", "")),
            str(row.get("seed", "")),
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_history(path, history):
    """Per-epoch loss table as CSV, one column per history key."""
    keys = list(history)
    n = max((len(v) for v in history.values()), default=0)
    lines = [",".join(["epoch"] + keys)]
    for i in range(n):
        lines.append(",".join([str(i)] + [_format_value(history[k][i]) for k in keys]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary(path, summary):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
