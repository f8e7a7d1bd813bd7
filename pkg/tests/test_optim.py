import numpy as np
import pytest

from demian.nn import Parameter
from demian.optim import Adam


def make_param(value, decay=True):
    return Parameter(np.asarray(value, dtype=float), decay=decay)


def test_zero_grad_zero_decay_is_fixed_point():
    p = make_param([[1.5, -2.0]])
    opt = Adam([p], learning_rate=0.1)
    for _ in range(5):
        p.grad[...] = 0.0
        opt.step()
    assert np.array_equal(p.value, [[1.5, -2.0]])


def test_first_step_magnitude_is_learning_rate(rng):
    # bias correction cancels the gradient scale at t=1: step = -lr * sign(g)
    g = rng.uniform(0.5, 2.0, size=(3, 4)) * rng.choice([-1.0, 1.0], size=(3, 4))
    p = make_param(np.zeros((3, 4)))
    opt = Adam([p], learning_rate=0.05)
    p.grad[...] = g
    opt.step()
    assert np.allclose(p.value, -0.05 * np.sign(g), rtol=1e-7)


def test_two_step_scalar_trajectory_matches_hand_arithmetic():
    p = make_param([1.0])
    opt = Adam([p], learning_rate=0.1, beta1=0.5, beta2=0.999)
    seen = []
    for _ in range(2):
        p.grad[...] = 1.0
        opt.step()
        seen.append(p.value[0])
    # the same two updates written out by hand
    value, m, v = 1.0, 0.0, 0.0
    hand = []
    for t in (1, 2):
        m = 0.5 * m + 0.5 * 1.0
        v = 0.999 * v + 0.001 * 1.0
        m_hat = m / (1.0 - 0.5**t)
        v_hat = v / (1.0 - 0.999**t)
        value -= 0.1 * m_hat / (np.sqrt(v_hat) + 1e-8)
        hand.append(value)
    assert np.allclose(seen, hand, rtol=0, atol=1e-15)
    # both steps move by almost exactly -lr since m_hat = v_hat = 1
    assert np.allclose(hand, [1.0 - 0.1, 1.0 - 0.2], atol=1e-8)


def test_weight_decay_augments_gradient():
    p = make_param([2.0])
    opt = Adam([p], learning_rate=0.01, weight_decay=0.5)
    p.grad[...] = 0.0
    opt.step()
    # effective gradient 0.5*2.0 = 1.0 > 0, so the value must shrink
    assert p.value[0] < 2.0


def test_weight_decay_skips_undecayed_params():
    decayed = make_param([2.0], decay=True)
    frozen = make_param([2.0], decay=False)
    opt = Adam([decayed, frozen], learning_rate=0.01, weight_decay=0.5)
    decayed.grad[...] = 0.0
    frozen.grad[...] = 0.0
    opt.step()
    assert decayed.value[0] < 2.0
    assert frozen.value[0] == 2.0


def test_first_step_scales_exactly_with_learning_rate(rng):
    # starting at zero, the value after one step IS the update
    g = rng.standard_normal((4, 3))
    p1 = make_param(np.zeros((4, 3)))
    p2 = make_param(np.zeros((4, 3)))
    a1 = Adam([p1], learning_rate=0.01)
    a2 = Adam([p2], learning_rate=0.02)
    p1.grad[...] = g
    p2.grad[...] = g
    a1.step()
    a2.step()
    assert np.array_equal(2.0 * p1.value, p2.value)


def test_quadratic_converges_100x():
    # minimize 0.5*||p||^2, gradient is p itself
    rng = np.random.default_rng(0)
    p = make_param(rng.standard_normal(10))
    start = np.linalg.norm(p.value)
    opt = Adam([p], learning_rate=0.01)
    for _ in range(500):
        p.grad[...] = p.value
        opt.step()
    assert np.linalg.norm(p.value) <= start / 100.0


def test_step_counter_and_moment_shapes():
    p = make_param(np.zeros((2, 2)))
    opt = Adam([p])
    for expected in (1, 2, 3):
        p.grad[...] = 1.0
        opt.step()
        assert opt.t == expected
    assert all(m.shape == p.value.shape for m in opt.m)
    assert all(np.all(v >= 0.0) for v in opt.v)


def test_shape_drift_raises():
    p = make_param(np.zeros((2, 2)))
    opt = Adam([p])
    p.value = np.zeros((3, 3))
    p.grad = np.zeros((3, 3))
    with pytest.raises(RuntimeError, match="drifted"):
        opt.step()
