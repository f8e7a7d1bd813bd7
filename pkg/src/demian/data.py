"""Datasets: MNIST IDX ingestion, left/right pixel splits, synthetic generators."""

import gzip
import struct
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_labels, as_matrix, as_paired_matrices

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049


class IdxFormatError(ValueError):
    """Raised for malformed IDX files (bad magic, truncated payload)."""


@dataclass
class PairedDataset:
    """Aligned two-modality samples with optional integer labels."""

    x: np.ndarray
    y: np.ndarray
    labels: np.ndarray | None = None
    split_tag: str = "train"

    def __post_init__(self):
        self.x = as_matrix(self.x, "x", allow_empty=True)
        self.y = as_matrix(self.y, "y", allow_empty=True)
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"x and y must have the same number of rows: {self.x.shape} vs {self.y.shape}"
            )
        if self.labels is not None:
            self.labels = as_labels(self.labels, self.x.shape[0])

    @property
    def n(self):
        return self.x.shape[0]

    def subset(self, indices, split_tag=None):
        indices = np.asarray(indices)
        return PairedDataset(
            x=self.x[indices],
            y=self.y[indices],
            labels=None if self.labels is None else self.labels[indices],
            split_tag=self.split_tag if split_tag is None else split_tag,
        )


@dataclass
class EmbeddingSet:
    """Learned representations for one dataset split, with provenance."""

    x: np.ndarray | None = None
    y: np.ndarray | None = None
    split_tag: str = ""
    source: str = ""
    meta: dict = field(default_factory=dict)

    def view(self, modality):
        emb = {"x": self.x, "y": self.y}.get(modality)
        if emb is None:
            raise ValueError(f"embedding set has no '{modality}' view")
        return emb


def _open_maybe_gzip(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_header(data, n_dims, expected_magic, path):
    if len(data) < 4:
        raise IdxFormatError(f"{path}: truncated header, expected 4 bytes, found {len(data)}")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise IdxFormatError(f"{path}: expected magic {expected_magic}, found {magic}")
    need = 4 * (1 + n_dims)
    if len(data) < need:
        raise IdxFormatError(f"{path}: truncated header, expected {need} bytes, found {len(data)}")
    dims = struct.unpack(">" + "I" * n_dims, data[4:need])
    return dims, data[need:]


def load_mnist_idx(images_path, labels_path):
    """Load an MNIST-style IDX image/label file pair.

    Both files are big-endian with a 32-bit magic (2051 for images, 2049 for
    labels) followed by 32-bit dimension sizes and raw unsigned bytes.
    Gzipped files are handled transparently. Pixels come back as float64 in
    [0, 1] (divided by 255), flattened to one row per image.
    """
    with _open_maybe_gzip(images_path) as f:
        raw = f.read()
    (n, rows, cols), payload = _read_header(raw, 3, IDX_IMAGE_MAGIC, images_path)
    expected = n * rows * cols
    if len(payload) != expected:
        raise IdxFormatError(
            f"{images_path}: expected {expected} data bytes, found {len(payload)}"
        )
    images = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    images = images.reshape(n, rows * cols)

    with _open_maybe_gzip(labels_path) as f:
        raw = f.read()
    (n_labels,), payload = _read_header(raw, 1, IDX_LABEL_MAGIC, labels_path)
    if len(payload) != n_labels:
        raise IdxFormatError(
            f"{labels_path}: expected {n_labels} data bytes, found {len(payload)}"
        )
    labels = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    if n_labels != n:
        raise IdxFormatError(
            f"image/label count mismatch: {n} images vs {n_labels} labels"
        )
    return images, labels


def split_left_right(images, labels=None, split_tag="train"):
    """Split 28x28 images into left/right 14-column halves as two modalities."""
    images = as_matrix(images, "images")
    if images.shape[1] != 784:
        raise ValueError(f"expected 784-wide rows (28x28 images), got shape {images.shape}")
    cube = images.reshape(-1, 28, 28)
    left = cube[:, :, :14].reshape(-1, 392)
    right = cube[:, :, 14:].reshape(-1, 392)
    return PairedDataset(x=left, y=right, labels=labels, split_tag=split_tag)


def join_left_right(left, right):
    """Inverse of :func:`split_left_right`."""
    left, right = as_paired_matrices(left, right, "left", "right")
    if left.shape[1] != 392 or right.shape[1] != 392:
        raise ValueError(f"expected 392-wide halves, got {left.shape} and {right.shape}")
    cube = np.concatenate(
        [left.reshape(-1, 28, 14), right.reshape(-1, 28, 14)], axis=2
    )
    return cube.reshape(-1, 784)


def _stratified_counts(labels, classes, total):
    """Per-class draw counts, proportional with largest-remainder rounding."""
    sizes = np.array([(labels == c).sum() for c in classes], dtype=np.int64)
    exact = total * sizes / sizes.sum()
    counts = np.floor(exact).astype(np.int64)
    remainder = total - counts.sum()
    if remainder > 0:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:remainder]] += 1
    return counts


def make_validation_split(data, n_valid, seed=0):
    """Split off ``n_valid`` rows, stratified by label when labels exist."""
    n = data.n
    if n_valid >= n:
        raise ValueError(f"n_valid must be < {n}, got {n_valid}")
    if n_valid < 0:
        raise ValueError(f"n_valid must be >= 0, got {n_valid}")
    rng = np.random.default_rng(seed)
    if n_valid == 0:
        valid_idx = np.array([], dtype=np.int64)
    elif data.labels is None:
        valid_idx = rng.permutation(n)[:n_valid]
    else:
        classes = np.unique(data.labels)
        counts = _stratified_counts(data.labels, classes, n_valid)
        picks = []
        for c, k in zip(classes, counts):
            members = np.flatnonzero(data.labels == c)
            picks.append(rng.permutation(members)[:k])
        valid_idx = np.concatenate(picks)
    mask = np.zeros(n, dtype=bool)
    mask[valid_idx] = True
    train = data.subset(np.flatnonzero(~mask), split_tag="train")
    valid = data.subset(np.sort(valid_idx), split_tag="valid")
    return train, valid


def _rotation_matrix(d, angle_deg):
    """Block-diagonal Givens rotation by ``angle_deg`` on coordinate pairs."""
    r = np.eye(d)
    theta = np.deg2rad(angle_deg)
    c, s = np.cos(theta), np.sin(theta)
    for i in range(0, d - 1, 2):
        r[i, i] = c
        r[i, i + 1] = -s
        r[i + 1, i] = s
        r[i + 1, i + 1] = c
    return r


def synth_rotation_dataset(n, d=2, angle=30.0, noise=0.0, seed=0, n_classes=3,
                           center_scale=3.0, split_tag="train"):
    """Labeled Gaussian mixture as modality x; a rotated copy as modality y.

    ``angle`` is either degrees for a fixed planar rotation ("random" draws a
    random orthogonal matrix instead). Class labels are balanced to within
    one sample.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=center_scale, size=(n_classes, d))
    labels = rng.permutation(np.arange(n) % n_classes)
    x = centers[labels] + rng.standard_normal((n, d))
    if angle == "random":
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        y = x @ q.T
    elif float(angle) == 0.0:
        y = x.copy()
    else:
        y = x @ _rotation_matrix(d, float(angle)).T
    if noise:
        y = y + noise * rng.standard_normal((n, d))
    return PairedDataset(x=x, y=y, labels=labels, split_tag=split_tag)


def synth_cca_dataset(n, dx, dy, correlations, seed=0, mix=True, split_tag="train"):
    """Joint-Gaussian pair with planted canonical correlations.

    Latent pairs (u_i, v_i) are built with corr(u_i, v_i) = correlations[i],
    padded with independent coordinates, then (when ``mix``) passed through
    random invertible affine maps, which leave canonical correlations
    unchanged.
    """
    correlations = np.asarray(correlations, dtype=np.float64)
    r = correlations.size
    if r > min(dx, dy):
        raise ValueError(f"{r} planted correlations do not fit in ({dx}, {dy})")
    if np.any((correlations < 0) | (correlations > 1)):
        raise ValueError("planted correlations must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n, r))
    v = correlations * u + np.sqrt(1.0 - correlations**2) * rng.standard_normal((n, r))
    x = np.concatenate([u, rng.standard_normal((n, dx - r))], axis=1)
    y = np.concatenate([v, rng.standard_normal((n, dy - r))], axis=1)
    if mix:
        ax = rng.standard_normal((dx, dx)) + 0.5 * np.eye(dx)
        ay = rng.standard_normal((dy, dy)) + 0.5 * np.eye(dy)
        x = x @ ax.T + rng.standard_normal(dx)
        y = y @ ay.T + rng.standard_normal(dy)
    return PairedDataset(x=x, y=y, labels=None, split_tag=split_tag)
