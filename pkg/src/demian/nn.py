"""Dense layer stacks with explicit forward/backward passes.

Everything is a 2-D float64 array with one sample per row. Layers cache the
intermediates the backward pass needs only during train-mode forwards, so
eval-mode forwards never write any state and are safe to share between
threads. Backward accumulates into parameter gradients; callers zero them
between optimization steps.
"""

import numpy as np


def matmul(a, b):
    """Matrix product with an explicit inner-dimension check."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}: inner dimensions differ")
    return a @ b


class Parameter:
    """A trainable array paired with its accumulated gradient.

    ``decay`` marks whether weight decay applies to this parameter
    (affine weights yes, normalization scales/shifts no).
    """

    __slots__ = ("value", "grad", "decay")

    def __init__(self, value, decay=True):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.decay = bool(decay)

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0.0


class Layer:
    """Base layer: forward caches state in train mode, backward consumes it."""

    _cache = None

    def params(self):
        return []

    def forward(self, x, train=False):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError

    def _take_cache(self):
        cache = self._cache
        if cache is None:
            raise RuntimeError(
                f"{type(self).__name__}.backward called without a preceding train-mode forward"
            )
        self._cache = None
        return cache


class Dense(Layer):
    """Affine map x @ W + b.

    Weights start uniform in +-sqrt(6 / (fan_in + fan_out)), biases at zero.
    """

    def __init__(self, in_width, out_width, rng=None):
        if rng is None:
            rng = np.random.default_rng()
        limit = np.sqrt(6.0 / (in_width + out_width))
        self.in_width = int(in_width)
        self.out_width = int(out_width)
        self.W = Parameter(rng.uniform(-limit, limit, size=(in_width, out_width)))
        self.b = Parameter(np.zeros((1, out_width)))

    def params(self):
        return [self.W, self.b]

    def forward(self, x, train=False):
        if x.shape[1] != self.in_width:
            raise ValueError(
                f"Dense expects {self.in_width} input columns, got input of shape {x.shape}"
            )
        if train:
            self._cache = x
        return x @ self.W.value + self.b.value

    def backward(self, grad_out):
        x = self._take_cache()
        self.W.grad += x.T @ grad_out
        self.b.grad += grad_out.sum(axis=0, keepdims=True)
        return grad_out @ self.W.value.T


class ReLU(Layer):
    def forward(self, x, train=False):
        mask = x > 0.0
        if train:
            self._cache = mask
        return np.where(mask, x, 0.0)

    def backward(self, grad_out):
        mask = self._take_cache()
        return np.where(mask, grad_out, 0.0)


class ELU(Layer):
    """v for v > 0, alpha * (exp(v) - 1) otherwise."""

    def __init__(self, alpha=1.0):
        self.alpha = float(alpha)

    def forward(self, x, train=False):
        neg = np.minimum(x, 0.0)
        out = np.where(x > 0.0, x, self.alpha * np.expm1(neg))
        if train:
            self._cache = (x > 0.0, out)
        return out

    def backward(self, grad_out):
        pos, out = self._take_cache()
        # d/dv alpha*(e^v - 1) = alpha*e^v = out + alpha on the negative side
        return np.where(pos, grad_out, grad_out * (out + self.alpha))


class BatchNorm(Layer):
    """Per-column batch normalization with learnable scale/shift.

    Train mode standardizes with biased batch statistics and updates the
    running statistics by EMA (running <- (1-momentum)*running + momentum*batch).
    Eval mode applies the fixed affine map defined by the running statistics.
    """

    def __init__(self, width, momentum=0.1, eps=1e-5):
        self.width = int(width)
        self.momentum = float(momentum)
        self.eps = float(eps)
        self.gamma = Parameter(np.ones((1, width)), decay=False)
        self.beta = Parameter(np.zeros((1, width)), decay=False)
        self.running_mean = np.zeros(width)
        self.running_var = np.ones(width)

    def params(self):
        return [self.gamma, self.beta]

    def forward(self, x, train=False):
        if x.shape[1] != self.width:
            raise ValueError(f"BatchNorm expects {self.width} columns, got shape {x.shape}")
        if not train:
            inv = 1.0 / np.sqrt(self.running_var + self.eps)
            return self.gamma.value * ((x - self.running_mean) * inv) + self.beta.value
        if x.shape[0] < 2:
            raise ValueError(f"BatchNorm in train mode needs batch size >= 2, got {x.shape[0]}")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        self.running_mean = (1.0 - self.momentum) * self.running_mean + self.momentum * mean
        self.running_var = (1.0 - self.momentum) * self.running_var + self.momentum * var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv
        self._cache = (xhat, inv, x.shape[0])
        return self.gamma.value * xhat + self.beta.value

    def backward(self, grad_out):
        xhat, inv, n = self._take_cache()
        self.gamma.grad += (grad_out * xhat).sum(axis=0, keepdims=True)
        self.beta.grad += grad_out.sum(axis=0, keepdims=True)
        gh = grad_out * self.gamma.value
        return (inv / n) * (n * gh - gh.sum(axis=0) - xhat * (gh * xhat).sum(axis=0))


class Network:
    """An ordered stack of layers sharing one forward/backward protocol."""

    def __init__(self, layers=()):
        self.layers = list(layers)

    def forward(self, x, train=False):
        h = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            h = layer.forward(h, train=train)
        return h

    def backward(self, grad_out):
        g = np.asarray(grad_out, dtype=np.float64)
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def zero_grads(self):
        for p in self.params():
            p.zero_grad()


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_cross_entropy(logits, labels):
    """Mean negative log-likelihood of integer labels under a softmax.

    Returns ``(loss, grad_logits)`` where the gradient is already divided by
    the batch size, so it feeds straight into ``Network.backward``.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"labels must have shape ({n},), got {labels.shape}")
    if n and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"labels must lie in [0, {c}), got range [{labels.min()}, {labels.max()}]")
    logp = _log_softmax(logits)
    rows = np.arange(n)
    loss = -logp[rows, labels].mean()
    grad = np.exp(logp)
    grad[rows, labels] -= 1.0
    grad /= n
    return loss, grad


class GaussianPrior:
    """Seeded sampler of standard-normal rows for the prior class."""

    def __init__(self, dim, seed=0):
        if dim < 0:
            raise ValueError(f"dim must be >= 0, got {dim}")
        self.dim = int(dim)
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def sample(self, batch):
        if batch < 1:
            raise ValueError(f"batch must be >= 1, got {batch}")
        return self._rng.standard_normal((batch, self.dim))
