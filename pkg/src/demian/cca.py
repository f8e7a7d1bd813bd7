"""Linear canonical correlation analysis via whitened cross-covariance SVD."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import as_matrix, as_paired_matrices


def _auto_reg(cov):
    return 1e-4 * np.trace(cov) / cov.shape[0]


def _inv_sqrt_psd(cov, reg, name):
    """Inverse square root of a covariance, ridge-stabilized and symmetrized."""
    w, v = np.linalg.eigh(cov + reg * np.eye(cov.shape[0]))
    floor = max(w.max(), 0.0) * 1e-12
    if reg == 0.0 and w.min() <= max(w.max(), 0.0) * 1e-10:
        raise np.linalg.LinAlgError(
            f"{name} covariance is rank-deficient; refit with reg > 0"
        )
    w = np.maximum(w, max(floor, np.finfo(float).tiny))
    m = (v / np.sqrt(w)) @ v.T
    return (m + m.T) / 2.0


def _lex_less(a, b):
    """Total order on equal-shaped arrays: first differing entry decides."""
    af, bf = a.ravel(), b.ravel()
    neq = af != bf
    if not neq.any():
        return False
    i = np.argmax(neq)
    return af[i] < bf[i]


class LinearCCA(BaseEstimator):
    """Ridge-regularized linear CCA.

    Fits projection weights for two views so that successive projected
    components are maximally correlated under unit-variance constraints.
    Computed by whitening both covariances (with ``reg`` added to each
    diagonal) and taking the SVD of the whitened cross-covariance.

    ``reg="auto"`` uses 1e-4 * trace(cov)/dim per view, which keeps the fit
    well-posed on rank-deficient inputs such as image pixels with constant
    border columns. The whitened SVD is always taken in a canonical
    orientation of the two views, so fitting on (Y, X) gives bit-identical
    correlations with the weight matrices swapped.

    Attributes (after fit): ``x_weights_`` (d_x, r), ``y_weights_`` (d_y, r),
    ``correlations_`` (r,) non-increasing in [0, 1], ``x_mean_``, ``y_mean_``.
    """

    def __init__(self, n_components=50, reg="auto"):
        self.n_components = n_components
        self.reg = reg

    def fit(self, X, Y):
        X, Y = as_paired_matrices(X, Y)
        n, dx = X.shape
        dy = Y.shape[1]
        if n < 2:
            raise ValueError(f"need at least 2 paired rows, got {n}")
        r = self.n_components
        if not 1 <= r <= min(dx, dy):
            raise ValueError(
                f"n_components must lie in [1, {min(dx, dy)}] for views of widths "
                f"({dx}, {dy}), got {r}"
            )
        self.x_mean_ = X.mean(axis=0)
        self.y_mean_ = Y.mean(axis=0)
        xc = X - self.x_mean_
        yc = Y - self.y_mean_
        sxx = xc.T @ xc / n
        syy = yc.T @ yc / n
        sxy = xc.T @ yc / n

        reg_x = _auto_reg(sxx) if self.reg == "auto" else float(self.reg)
        reg_y = _auto_reg(syy) if self.reg == "auto" else float(self.reg)
        isx = _inv_sqrt_psd(sxx, reg_x, "X")
        isy = _inv_sqrt_psd(syy, reg_y, "Y")

        # Canonical orientation: the SVD input is bitwise identical no matter
        # which order the two views were passed in, giving exact swap symmetry.
        swap = dy < dx or (dx == dy and _lex_less(sxy.T, sxy))
        if swap:
            sab, ia, ib = np.ascontiguousarray(sxy.T), isy, isx
        else:
            sab, ia, ib = sxy, isx, isy
        u, s, vt = np.linalg.svd((ia @ sab) @ ib, full_matrices=False)
        wa = ia @ u[:, :r]
        wb = ib @ np.ascontiguousarray(vt[:r].T)
        if swap:
            self.x_weights_, self.y_weights_ = wb, wa
        else:
            self.x_weights_, self.y_weights_ = wa, wb
        self.correlations_ = np.minimum(s[:r], 1.0)
        return self

    def _require_fitted(self):
        if not hasattr(self, "x_weights_"):
            raise NotFittedError("this LinearCCA instance is not fitted yet; call fit first")

    def transform(self, X=None, Y=None):
        """Center and project one or both views; tuple when both are given."""
        self._require_fitted()
        if X is None and Y is None:
            raise ValueError("provide at least one view to transform")
        fx = fy = None
        if X is not None:
            X = as_matrix(X, "X", allow_empty=True)
            if X.shape[1] != self.x_mean_.shape[0]:
                raise ValueError(
                    f"X has {X.shape[1]} columns, model was fit with {self.x_mean_.shape[0]}"
                )
            fx = (X - self.x_mean_) @ self.x_weights_
        if Y is not None:
            Y = as_matrix(Y, "Y", allow_empty=True)
            if Y.shape[1] != self.y_mean_.shape[0]:
                raise ValueError(
                    f"Y has {Y.shape[1]} columns, model was fit with {self.y_mean_.shape[0]}"
                )
            fy = (Y - self.y_mean_) @ self.y_weights_
        if fy is None:
            return fx
        if fx is None:
            return fy
        return fx, fy

    def fit_transform(self, X, Y):
        return self.fit(X, Y).transform(X, Y)

    def embed(self, X=None, Y=None, split_tag=""):
        """Projections wrapped in an :class:`EmbeddingSet` with provenance."""
        from .data import EmbeddingSet

        fx = self.transform(X=X) if X is not None else None
        fy = self.transform(Y=Y) if Y is not None else None
        return EmbeddingSet(x=fx, y=fy, split_tag=split_tag, source="cca",
                            meta={"n_components": self.n_components})
