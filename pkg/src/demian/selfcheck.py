"""Built-in gradient checks and oracle suites, runnable via ``demian selftest``.

Each check returns True/False and is deterministic for a given seed, so two
selftest runs with the same seed produce byte-identical metrics files.
"""

import numpy as np

from .cca import LinearCCA
from .data import synth_cca_dataset
from .evaluation import cosine_retrieval_classify
from .logreg import SoftmaxRegression
from .model import adversarial_losses, make_discriminator, make_generator, pairing_loss
from .nn import (ELU, BatchNorm, Dense, GaussianPrior, Network, ReLU, matmul,
                 softmax_cross_entropy)
from .optim import Adam


def _rel_err(analytic, fd, floor=1e-3):
    """Relative error with a magnitude floor.

    Central differences at h=1e-5 in double precision carry ~1e-10 absolute
    noise (roundoff of the objective divided by 2h), so ratios are only
    meaningful for gradients above ~1e-3; below that the comparison is
    dominated by the noise even when the analytic gradient is exact.
    """
    return abs(analytic - fd) / max(abs(analytic), abs(fd), floor)


def finite_difference_network(net, x, rng, h=1e-5):
    """Max relative error between analytic and central-difference gradients."""
    out = net.forward(x, train=True)
    weights = rng.standard_normal(out.shape)

    def objective():
        return float((net.forward(x, train=True) * weights).sum())

    net.zero_grads()
    net.forward(x, train=True)
    net.backward(weights)
    worst = 0.0
    for p in net.params():
        flat = p.value.ravel()
        gflat = p.grad.ravel()
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            up = objective()
            flat[i] = keep - h
            down = objective()
            flat[i] = keep
            fd = (up - down) / (2 * h)
            worst = max(worst, _rel_err(gflat[i], fd))
    return worst


def gradient_check_layers(seed=0, n_seeds=5, tol=1e-4):
    """Finite-difference check over the layer zoo at random small shapes.

    Dense biases in front of BatchNorm are lifted so no column collapses to
    near-zero variance; a variance at the scale of BatchNorm's epsilon makes
    the objective too stiff for central differences at h=1e-5 even though
    the analytic gradient is exact.
    """
    worst = 0.0
    for s in range(n_seeds):
        rng = np.random.default_rng(seed + s)
        batch = int(rng.integers(4, 9))
        win = int(rng.integers(2, 17))
        wout = int(rng.integers(2, 17))
        stacks = [
            Network([Dense(win, wout, rng)]),
            Network([Dense(win, wout, rng), ReLU()]),
            Network([Dense(win, wout, rng), ELU(1.0)]),
            Network([Dense(win, wout, rng), ReLU(), BatchNorm(wout)]),
            make_generator(win, (wout,), 3, "elu", rng=rng),
        ]
        for net in stacks:
            for layer in net.layers:
                if isinstance(layer, Dense):
                    layer.b.value[...] = 0.5
        x = rng.standard_normal((batch, win))
        for net in stacks:
            worst = max(worst, finite_difference_network(net, x, rng))
    return worst < tol


def gradient_check_pairing(seed=0, n_seeds=5, tol=1e-4, h=1e-5):
    worst = 0.0
    for s in range(n_seeds):
        rng = np.random.default_rng(seed + s)
        n, d = int(rng.integers(2, 8)), int(rng.integers(2, 8))
        fx = rng.standard_normal((n, d))
        fy = rng.standard_normal((n, d))
        for kind in ("l2sq", "cosine"):
            _, (gx, gy) = pairing_loss(fx, fy, kind)
            for arr, g in ((fx, gx), (fy, gy)):
                flat, gflat = arr.ravel(), g.ravel()
                for i in range(flat.size):
                    keep = flat[i]
                    flat[i] = keep + h
                    up, _ = pairing_loss(fx, fy, kind)
                    flat[i] = keep - h
                    down, _ = pairing_loss(fx, fy, kind)
                    flat[i] = keep
                    fd = (up - down) / (2 * h)
                    worst = max(worst, _rel_err(gflat[i], fd))
    return worst < tol


def check_matmul(seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((4, 2))
    ref = np.zeros((3, 2))
    for i in range(3):
        for j in range(2):
            for k in range(4):
                ref[i, j] += a[i, k] * b[k, j]
    return np.allclose(matmul(a, b), ref, rtol=1e-12, atol=1e-12)


def check_softmax_values(seed=0):
    loss3, _ = softmax_cross_entropy(np.zeros((4, 3)), np.array([0, 1, 2, 0]))
    loss_direct, _ = softmax_cross_entropy(np.array([[1.0, 2.0, 3.0]]), np.array([2]))
    expected = np.log(1 + np.exp(-1.0) + np.exp(-2.0))
    return abs(loss3 - np.log(3)) < 1e-12 and abs(loss_direct - expected) < 1e-12


def check_adam_two_steps(seed=0):
    class P:
        def __init__(self):
            self.value = np.array([1.0])
            self.grad = np.array([1.0])
            self.decay = True

    p = P()
    opt = Adam([p], learning_rate=0.1, beta1=0.5, beta2=0.999)
    trajectory = []
    for _ in range(2):
        p.grad = np.array([1.0])
        opt.step()
        trajectory.append(p.value[0])
    # hand arithmetic of the same two updates
    ref, m, v = 1.0, 0.0, 0.0
    hand = []
    for t in (1, 2):
        m = 0.5 * m + 0.5 * 1.0
        v = 0.999 * v + 0.001 * 1.0
        ref -= 0.1 * (m / (1 - 0.5**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        hand.append(ref)
    return np.allclose(trajectory, hand, rtol=0, atol=1e-15)


def check_batchnorm_moments(seed=0):
    rng = np.random.default_rng(seed)
    bn = BatchNorm(6)
    out = bn.forward(rng.standard_normal((64, 6)) * 3 + 1, train=True)
    return bool(np.all(np.abs(out.mean(axis=0)) < 1e-8)
                and np.all(np.abs(out.var(axis=0) - 1) < 1e-5))


def check_prior_moments(seed=0):
    draw = GaussianPrior(8, seed=seed).sample(100_000)
    return bool(np.all(np.abs(draw.mean(axis=0)) < 0.02)
                and np.all(np.abs(draw.var(axis=0) - 1) < 0.03))


def check_cca_planted(seed=0):
    planted = np.array([0.9, 0.5, 0.1])
    data = synth_cca_dataset(4000, 6, 5, planted, seed=seed)
    model = LinearCCA(n_components=3, reg=1e-8).fit(data.x, data.y)
    return bool(np.all(np.abs(model.correlations_ - planted) < 0.05))


def check_adversarial_uniform(seed=0):
    rng = np.random.default_rng(seed)
    disc = make_discriminator(4, (8,), rng)
    disc.layers[-1].W.value[...] = 0.0
    fx, fy, z = (rng.standard_normal((5, 4)) for _ in range(3))
    disc_loss, gen_adv, _ = adversarial_losses(disc, fx, fy, z)
    return abs(disc_loss - 3 * np.log(3)) < 1e-12 and abs(gen_adv + 2 * np.log(3)) < 1e-12


def check_logreg_separable(seed=0):
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.standard_normal((40, 2)) + 4, rng.standard_normal((40, 2)) - 4])
    t = np.repeat([0, 1], 40)
    clf = SoftmaxRegression(max_iter=300).fit(x, t)
    return float((clf.predict(x) == t).mean()) == 1.0


def check_zero_shot_geometry(seed=0):
    classes = np.array([[1.0, 0.0], [np.cos(np.pi / 3), np.sin(np.pi / 3)]])
    rng = np.random.default_rng(seed)
    angles = np.concatenate([rng.uniform(-np.pi / 9, np.pi / 9, 50),
                             np.pi / 3 + rng.uniform(-np.pi / 9, np.pi / 9, 50)])
    queries = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    truth = np.repeat([0, 1], 50)
    result = cosine_retrieval_classify(queries, classes, np.array([0, 1]))
    scaled = cosine_retrieval_classify(queries * 4.0, classes, np.array([0, 1]))
    tie = cosine_retrieval_classify(np.array([[1.0, 1.0]]),
                                    np.eye(2), np.array([7, 3]))
    return (np.array_equal(result.predictions, truth)
            and np.array_equal(scaled.predictions, result.predictions)
            and tie.predictions[0] == 3)


def run_all(seed=0):
    """Run every check; returns [(name, passed)] in a fixed order."""
    checks = [
        ("matmul_vs_triple_loop", check_matmul),
        ("layer_gradients_finite_difference", gradient_check_layers),
        ("pairing_gradients_finite_difference", gradient_check_pairing),
        ("softmax_cross_entropy_values", check_softmax_values),
        ("adam_two_step_trajectory", check_adam_two_steps),
        ("batchnorm_train_moments", check_batchnorm_moments),
        ("gaussian_prior_moments", check_prior_moments),
        ("cca_planted_correlations", check_cca_planted),
        ("adversarial_uniform_losses", check_adversarial_uniform),
        ("logreg_separable", check_logreg_separable),
        ("zero_shot_geometry", check_zero_shot_geometry),
    ]
    return [(name, bool(fn(seed=seed))) for name, fn in checks]
