"""Multinomial logistic regression trained full-batch with Adam."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ._validation import as_labels, as_matrix
from .nn import Parameter, softmax_cross_entropy
from .optim import Adam


class SoftmaxRegression(BaseEstimator, ClassifierMixin):
    """Linear softmax classifier minimizing cross-entropy + (reg/2)*||W||^2.

    Weights start at zero and are updated full-batch with Adam until the
    L2 norm of the full gradient drops below ``tol`` or ``max_iter`` is
    reached, so fits are deterministic. The ridge penalty applies to the
    weight matrix only, never the intercept.
    """

    def __init__(self, reg=1e-4, learning_rate=0.05, max_iter=2000, tol=1e-4):
        self.reg = reg
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, t):
        X = as_matrix(X, "X")
        t = as_labels(t, X.shape[0])
        self.classes_ = np.unique(t)
        if self.classes_.size < 2:
            raise ValueError(
                f"training set has a single class ({self.classes_!r}); need at least 2"
            )
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        y = np.searchsorted(self.classes_, t)
        d, c = X.shape[1], self.classes_.size
        w = Parameter(np.zeros((d, c)))
        b = Parameter(np.zeros((1, c)))
        opt = Adam([w, b], learning_rate=self.learning_rate)
        for it in range(self.max_iter):
            logits = X @ w.value + b.value
            _, dlogits = softmax_cross_entropy(logits, y)
            w.grad = X.T @ dlogits + self.reg * w.value
            b.grad = dlogits.sum(axis=0, keepdims=True)
            gnorm = np.sqrt((w.grad**2).sum() + (b.grad**2).sum())
            if gnorm <= self.tol:
                break
            opt.step()
        self.W_ = w.value
        self.b_ = b.value.ravel()
        self.n_iter_ = it + 1
        self.converged_ = bool(gnorm <= self.tol)
        return self

    def _require_fitted(self):
        if not hasattr(self, "W_"):
            raise NotFittedError("this SoftmaxRegression instance is not fitted yet")

    def decision_function(self, X):
        self._require_fitted()
        X = as_matrix(X, "X", allow_empty=True)
        if X.shape[1] != self.W_.shape[0]:
            raise ValueError(f"X has {X.shape[1]} columns, model was fit with {self.W_.shape[0]}")
        return X @ self.W_ + self.b_

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[scores.argmax(axis=1)]

    def predict_proba(self, X):
        scores = self.decision_function(X)
        shifted = scores - scores.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)
