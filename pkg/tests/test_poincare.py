import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualkg.errors import OutsideBall
from dualkg.poincare import (
    MAX_NORM,
    ball_step,
    bias_step,
    clip_ball,
    dist_h,
    dist_h_grad,
    exp0,
    log0,
    mobius_add,
    mobius_add_vjp,
    mobius_matvec,
    murp_score,
    murp_score_grad,
    stretch_step,
)


def _ball(rng, n, d, high=0.9, low=0.0):
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True) * rng.uniform(low, high, size=(n, 1))


def _fd(f, x, eps=1e-6):
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


def test_log_exp_examples():
    np.testing.assert_array_equal(log0(np.zeros(3)), np.zeros(3))
    np.testing.assert_array_equal(exp0(np.zeros(3)), np.zeros(3))
    np.testing.assert_allclose(log0([0.5, 0.0]), [np.arctanh(0.5), 0.0], rtol=1e-15)
    np.testing.assert_allclose(log0([0.5, 0.0]), [0.5493061443340549, 0.0], rtol=1e-15)
    np.testing.assert_allclose(exp0([0.549306, 0.0]), [0.5, 0.0], atol=1e-6)


def test_log0_rejects_outside():
    with pytest.raises(OutsideBall):
        log0([1.0, 0.0])


def test_exp_log_inverse(rng):
    y = _ball(rng, 10_000, 4, high=MAX_NORM)
    assert np.max(np.abs(exp0(log0(y)) - y)) < 1e-9
    v = rng.normal(size=(10_000, 4))
    v *= rng.uniform(0, 5, size=(len(v), 1)) / np.linalg.norm(v, axis=1, keepdims=True)
    # tanh saturates to the clipping margin near |v| = 6; stay inside that range
    assert np.max(np.abs(log0(exp0(v)) - v)) < 1e-9


def test_mobius_examples(rng):
    x = _ball(rng, 1, 3)[0]
    np.testing.assert_allclose(mobius_add(x, np.zeros(3)), x, atol=1e-15)
    np.testing.assert_allclose(mobius_add(-x, x), 0.0, atol=1e-15)
    np.testing.assert_allclose(mobius_add([0.3, 0.0], [0.4, 0.0]), [0.625, 0.0], rtol=1e-15)


def test_mobius_bulk(rng):
    x, y = _ball(rng, 10_000, 5, high=0.99), _ball(rng, 10_000, 5, high=0.99)
    assert np.max(np.abs(mobius_add(x, np.zeros_like(x)) - x)) < 1e-9
    assert np.max(np.abs(mobius_add(-x, x))) < 1e-9
    assert np.all(np.linalg.norm(mobius_add(x, y), axis=1) < 1.0)


def test_mobius_matvec_examples(rng):
    x = np.array([0.3, 0.0])
    np.testing.assert_allclose(mobius_matvec(np.eye(2), x), x, rtol=1e-12)
    np.testing.assert_allclose(mobius_matvec(np.zeros((2, 2)), x), 0.0)
    # tanh(2 artanh 0.3) = 0.6 / 1.09
    np.testing.assert_allclose(mobius_matvec(np.array([2.0, 2.0]), x), [0.6 / 1.09, 0.0], rtol=1e-12)
    np.testing.assert_allclose(mobius_matvec(2 * np.eye(2), x)[0], 0.5504587155963303, rtol=1e-12)


def test_mobius_matvec_permutation(rng):
    m = rng.normal(size=6)
    x = _ball(rng, 1, 6)[0]
    perm = rng.permutation(6)
    np.testing.assert_allclose(mobius_matvec(m[perm], x[perm]), mobius_matvec(m, x)[perm], rtol=1e-12)


def test_dist_h_examples(rng):
    x = _ball(rng, 1, 3)[0]
    assert dist_h(x, x) == 0.0
    assert dist_h([0.0, 0.0], [0.5, 0.0]) == pytest.approx(1.0986122886681098, rel=1e-14)
    y = _ball(rng, 100, 3)
    z = _ball(rng, 100, 3)
    assert np.max(np.abs(dist_h(y, z) - dist_h(z, y))) < 1e-12


def test_dist_h_radial_closed_form(rng):
    x = _ball(rng, 10_000, 4, high=0.999)
    ref = 2 * np.arctanh(np.linalg.norm(x, axis=1))
    assert np.max(np.abs(dist_h(np.zeros_like(x), x) - ref)) < 1e-9


def test_dist_h_gradient(rng):
    for _ in range(20):
        x, y = _ball(rng, 2, 4, low=0.05)
        _, gx, gy = dist_h_grad(x, y)
        np.testing.assert_allclose(gx, _fd(lambda v: dist_h(v, y), x), rtol=1e-4, atol=1e-8)
        np.testing.assert_allclose(gy, _fd(lambda v: dist_h(x, v), y), rtol=1e-4, atol=1e-8)


def test_mobius_add_vjp(rng):
    x, y = _ball(rng, 2, 4)
    g = rng.normal(size=4)
    gx, gy = mobius_add_vjp(x, y, g)
    np.testing.assert_allclose(gx, _fd(lambda v: mobius_add(v, y) @ g, x), rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(gy, _fd(lambda v: mobius_add(x, v) @ g, y), rtol=1e-5, atol=1e-8)


def test_murp_examples(rng):
    h = _ball(rng, 1, 3)[0]
    assert murp_score(h, np.ones(3), np.zeros(3), h) == pytest.approx(0.0, abs=1e-12)
    rel = rng.normal(size=3), _ball(rng, 1, 3, high=0.3)[0]
    t = _ball(rng, 1, 3)[0]
    base = murp_score(h, *rel, t, 0.1, 0.2)
    assert murp_score(h, *rel, t, 0.1 + 0.7, 0.2) == pytest.approx(base + 0.7, abs=1e-12)
    expect = -dist_h([0.3, 0.0], [0.3 / 1.02, 0.0]) ** 2
    got = murp_score([0.3, 0.0], np.ones(2), [0.1, 0.0], [0.2, 0.0])
    assert got == pytest.approx(expect, rel=1e-12)
    # collinear: the Mobius gap is (0.3/1.02 - 0.3) / (1 - 0.09/1.02) = -0.006/0.93
    assert got == pytest.approx(-(2 * np.arctanh(0.006 / 0.93)) ** 2, rel=1e-9)


def test_murp_gradients(rng):
    d = 4
    for _ in range(20):
        h, t = _ball(rng, 2, d, low=0.05)
        r = rng.uniform(-1.5, 1.5, size=d)
        tr = _ball(rng, 1, d, high=0.3)[0]
        _, g = murp_score_grad(h, r, tr, t, 0.1, -0.3)
        np.testing.assert_allclose(g["head"], _fd(lambda v: murp_score(v, r, tr, t), h), rtol=1e-4, atol=1e-8)
        np.testing.assert_allclose(g["stretch"], _fd(lambda v: murp_score(h, v, tr, t), r), rtol=1e-4, atol=1e-8)
        np.testing.assert_allclose(g["translation"], _fd(lambda v: murp_score(h, r, v, t), tr), rtol=1e-4, atol=1e-8)
        np.testing.assert_allclose(g["tail"], _fd(lambda v: murp_score(h, r, tr, v), t), rtol=1e-4, atol=1e-8)
        assert g["b_head"] == 1.0 and g["b_tail"] == 1.0


def test_clip_ball():
    x = clip_ball([2.0, 0.0])
    assert np.linalg.norm(x) == pytest.approx(MAX_NORM)
    np.testing.assert_array_equal(clip_ball([0.5, 0.1]), [0.5, 0.1])


def test_ball_step_examples(rng):
    x = _ball(rng, 1, 3)[0]
    np.testing.assert_array_equal(ball_step(x, np.zeros(3), 0.1), x)
    edge = np.array([MAX_NORM, 0.0, 0.0])
    g = np.array([-1.0, 0.0, 0.0])
    moved = ball_step(edge, -g, 1.0)
    factor = ((1 - MAX_NORM**2) / 2) ** 2
    assert abs(moved[0] - edge[0]) == pytest.approx(factor, rel=1e-6)
    assert factor < 1.1e-10


def test_ball_step_increases_score(rng):
    h, t = _ball(rng, 2, 3, low=0.1)
    r, tr = np.ones(3), np.zeros(3)
    before, g = murp_score_grad(h, r, tr, t)
    after = murp_score(ball_step(h, -g["head"], 0.05), r, tr, t)
    assert after > before


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 10.0))
def test_ball_step_preserves_pin(seed, lr):
    rng = np.random.default_rng(seed)
    x = _ball(rng, 4, 5)
    x[:, -1] = 0.0
    out = ball_step(x, rng.normal(size=x.shape) * 10, lr, pinned=True)
    assert np.all(out[:, -1] == 0.0)
    assert np.all(np.linalg.norm(out, axis=1) <= MAX_NORM + 1e-12)


def test_bias_and_stretch_steps():
    assert bias_step(1.0, 0.0, 0.1) == 1.0
    assert bias_step(1.0, 2.0, 0.1) == pytest.approx(0.8)
    np.testing.assert_allclose(stretch_step(np.array([1.0, -2.0]), np.array([1.0, 1.0]), 0.5), [0.5, -2.5])


def test_bias_gradient_parity():
    f = lambda b: murp_score([0.1, 0.0], np.ones(2), np.zeros(2), [0.2, 0.0], b, 0.0)
    _, g = murp_score_grad([0.1, 0.0], np.ones(2), np.zeros(2), [0.2, 0.0], 0.3, 0.0)
    assert g["b_head"] == pytest.approx((f(0.3 + 1e-6) - f(0.3 - 1e-6)) / 2e-6, rel=1e-6)
