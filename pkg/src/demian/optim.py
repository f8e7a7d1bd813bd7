"""Adam with coupled L2 weight decay.

The decay term is added to the raw gradient before the moment updates
(grad <- grad + weight_decay * value), and only for parameters whose
``decay`` flag is set. The update denominator is sqrt(v_hat) + eps.
"""

import numpy as np


class Adam:
    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999,
                 eps=1e-8, weight_decay=0.0):
        self.params = list(params)
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        """Apply one bias-corrected update from the accumulated gradients."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.value.shape != m.shape:
                raise RuntimeError(
                    f"parameter shape {p.value.shape} drifted from optimizer state {m.shape}"
                )
            g = p.grad
            if self.weight_decay != 0.0 and p.decay:
                g = g + self.weight_decay * p.value
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.value -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def zero_grads(self):
        for p in self.params:
            p.zero_grad()
