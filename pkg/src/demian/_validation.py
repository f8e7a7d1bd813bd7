"""Input checks shared by the public estimators and functions."""

import numpy as np


def as_matrix(a, name="X", allow_empty=False):
    """Coerce to a 2-D float64 array and verify every entry is finite."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not allow_empty and m.size == 0 and m.shape[0] == 0:
        raise ValueError(f"{name} has no rows")
    if m.size and not np.isfinite(m).all():
        raise ValueError(f"{name} contains NaN or Inf entries")
    return m


def as_paired_matrices(x, y, xname="X", yname="Y"):
    x = as_matrix(x, xname)
    y = as_matrix(y, yname)
    if x.shape[0] != y.shape[0]:
        raise ValueError(
            f"{xname} and {yname} must have the same number of rows: "
            f"{x.shape} vs {y.shape}"
        )
    return x, y


def as_labels(t, n, name="labels"):
    """Coerce to a 1-D integer label array of length n."""
    t = np.asarray(t)
    if t.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {t.shape}")
    if not np.issubdtype(t.dtype, np.integer):
        ti = t.astype(np.int64)
        if t.size and not np.array_equal(ti, t):
            raise ValueError(f"{name} must be integer class indices")
        t = ti
    return t.astype(np.int64, copy=False)


def check_same_shape(a, b, aname="fx", bname="fy"):
    if a.shape != b.shape:
        raise ValueError(f"{aname} and {bname} must have equal shapes: {a.shape} vs {b.shape}")
