import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualkg.coords import mcp, mpc
from dualkg.errors import DegeneratePoint, DimensionMismatch
from dualkg.sphere import (
    angle_step,
    dist_s,
    dist_s_grad,
    f_rot,
    f_rot_batch,
    f_rot_vjp,
    proj_ring,
    proj_s,
    riemannian_factor,
    sphere_step,
)

TWO_PI = 2.0 * np.pi


def _shell(rng, n, d, w):
    x = rng.normal(size=(n, d))
    return w * x / np.linalg.norm(x, axis=1, keepdims=True)


def _fd(f, x, eps=1e-6):
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


# dist_s


def test_dist_s_examples():
    assert dist_s([0.6, 0.8], [0.6, 0.8]) == 0.0
    assert dist_s([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]) == pytest.approx(np.pi)
    assert dist_s([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.pi / 2)


def test_dist_s_errors():
    with pytest.raises(DimensionMismatch):
        dist_s([1.0, 0.0], [1.0, 0.0, 0.0])
    with pytest.raises(DegeneratePoint):
        dist_s([0.0, 0.0], [1.0, 0.0])


def test_dist_s_metric_axioms(rng):
    x, y, z = (_shell(rng, 1000, 6, 0.7) for _ in range(3))
    dxy, dyx = dist_s(x, y), dist_s(y, x)
    assert np.all(dxy >= 0)
    np.testing.assert_allclose(dxy, dyx, atol=1e-12)
    assert np.all(dist_s(x, x) < 1e-7)
    assert np.all(dxy <= dist_s(x, z) + dist_s(z, y) + 1e-12)


def test_dist_s_gradient(rng):
    for _ in range(20):
        x, y = _shell(rng, 2, 5, 0.6)
        if abs(np.dot(x, y)) / 0.36 > 1 - 1e-6:
            continue
        _, gx, gy = dist_s_grad(x, y)
        np.testing.assert_allclose(gx, _fd(lambda v: dist_s(v, y), x), rtol=1e-4, atol=1e-8)
        np.testing.assert_allclose(gy, _fd(lambda v: dist_s(x, v), y), rtol=1e-4, atol=1e-8)


# f_rot


def test_f_rot_identity_is_exact(rng):
    h = _shell(rng, 1, 7, 0.4)[0]
    assert np.array_equal(f_rot(h, np.zeros(6)), h)


def test_f_rot_quarter_turn():
    np.testing.assert_allclose(f_rot([1.0, 0.0], [np.pi / 2]), [0.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("d", [3, 10, 50])
def test_f_rot_closure(d, rng):
    w = 0.37
    h = _shell(rng, 10_000 // 3 + 1, d, w)
    r = rng.uniform(0, TWO_PI, size=(len(h), d - 1))
    assert np.max(np.abs(np.linalg.norm(f_rot(h, r), axis=1) - w)) < 1e-9


def test_f_rot_composition_on_circle(rng):
    h = _shell(rng, 200, 2, 0.8)
    r1, r2 = rng.uniform(0, TWO_PI, size=(2, 200, 1))
    np.testing.assert_allclose(f_rot(f_rot(h, r1), r2), f_rot(h, np.mod(r1 + r2, TWO_PI)), atol=1e-9)


def test_f_rot_composition_inside_canonical_chart(rng):
    # composition holds while every polar angle but the last stays in [0, pi)
    d = 6
    a = rng.uniform(0.1, 1.0, size=(200, d - 1))
    r1 = rng.uniform(0.0, 0.5, size=(200, d - 1))
    r2 = rng.uniform(0.0, 0.5, size=(200, d - 1))
    h = mpc(a, 0.5)
    np.testing.assert_allclose(f_rot(f_rot(h, r1), r2), f_rot(h, r1 + r2), atol=1e-9)


def test_f_rot_composition_breaks_across_chart_boundary():
    # in d >= 3 a non-final polar angle pushed past pi is re-read as 2 pi minus
    # itself, so two rotations differ from their angle sum
    h = mpc([0.5, 0.3], 1.0)
    r = [3.0, 0.0]
    once = f_rot(h, np.mod(np.add(r, r), TWO_PI))
    twice = f_rot(f_rot(h, r), r)
    assert np.max(np.abs(once - twice)) > 1e-3
    assert abs(np.linalg.norm(twice) - 1.0) < 1e-12


def test_f_rot_batch(rng):
    h = _shell(rng, 1, 5, 0.5)[0]
    r = rng.uniform(0, TWO_PI, size=(8, 4))
    batch = f_rot_batch(h, r)
    assert batch.shape == (8, 5)
    assert np.max(np.abs(batch - np.array([f_rot(h, ri) for ri in r]))) == 0.0
    np.testing.assert_array_equal(f_rot_batch(h, r[:1])[0], f_rot(h, r[0]))
    np.testing.assert_array_equal(f_rot_batch(h, np.zeros((4, 4))), np.tile(h, (4, 1)))
    assert f_rot_batch(h, np.empty((0, 4))).shape == (0, 5)


def test_f_rot_errors():
    with pytest.raises(DimensionMismatch):
        f_rot([1.0, 0.0, 0.0], [0.1])
    with pytest.raises(DegeneratePoint):
        f_rot([0.0, 0.0, 0.0], [0.1, 0.2])


def test_f_rot_vjp_matches_finite_differences(rng):
    d = 5
    for _ in range(20):
        h = mpc(rng.uniform(0.2, 2.9, size=d - 1), 0.6)
        r = rng.uniform(0, 0.1, size=d - 1)
        g = rng.normal(size=d)
        gh, gr = f_rot_vjp(h, r, g)
        np.testing.assert_allclose(gh, _fd(lambda v: f_rot(v, r) @ g, h), rtol=1e-4, atol=1e-7)
        np.testing.assert_allclose(gr, _fd(lambda v: f_rot(h, v) @ g, r), rtol=1e-4, atol=1e-7)


# projections and steps


def test_proj_s_examples():
    z = np.array([0.6, 0.8])
    assert np.array_equal(proj_s(z, 1.0), z)
    np.testing.assert_allclose(proj_s([3.0, 4.0], 1.0), [0.6, 0.8])
    np.testing.assert_allclose(proj_s([0.2, 0.0], 0.5), [0.5, 0.0])
    with pytest.raises(DegeneratePoint):
        proj_s([0.0, 0.0], 1.0)


def test_proj_ring():
    out = proj_ring([0.3, 0.4, 0.9], 0.5)
    np.testing.assert_allclose(out, [0.3, 0.4, 0.0])


def test_riemannian_factor_examples(rng):
    h = np.array([0.0, 1.0, 0.0])
    np.testing.assert_allclose(riemannian_factor(h, 2.5 * h), 0.0, atol=1e-15)
    g = np.array([0.3, 0.0, -0.2])
    np.testing.assert_allclose(riemannian_factor(h, g), g)
    np.testing.assert_array_equal(riemannian_factor(h, np.zeros(3)), np.zeros(3))
    h, g = rng.normal(size=(2, 4))
    dense = (1 + h @ g / np.linalg.norm(g)) * (np.eye(4) - np.outer(h, h)) @ g
    np.testing.assert_allclose(riemannian_factor(h, g), dense, rtol=1e-12)


def test_sphere_step(rng):
    h = _shell(rng, 1, 4, 0.5)[0]
    np.testing.assert_array_equal(sphere_step(h, np.zeros(4), 0.1), h)
    target = _shell(rng, 1, 4, 0.5)[0]
    d0, g, _ = dist_s_grad(h, target)
    out = sphere_step(h, 2 * d0 * g, 1e-3)
    assert dist_s(out, target) < d0
    np.testing.assert_allclose(proj_s(out, 0.5), out, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 1.0))
def test_sphere_step_stays_on_shell(seed, lr):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.1, 0.9)
    h = _shell(rng, 3, 6, w)
    out = sphere_step(h, rng.normal(size=h.shape), lr, w)
    assert np.max(np.abs(np.linalg.norm(out, axis=1) - w)) < 1e-9


def test_angle_step():
    a = np.array([0.5, 6.2])
    np.testing.assert_array_equal(angle_step(a, np.zeros(2), 0.1), a)
    out = angle_step(a, np.array([0.0, -1.0]), 0.2)
    assert np.all((out >= 0) & (out < TWO_PI))
    assert out[1] == pytest.approx(6.4 - TWO_PI)
    with pytest.raises(DimensionMismatch):
        angle_step(a, np.zeros(3), 0.1)


def test_angle_step_descends_on_instance_distance(rng):
    h, t = _shell(rng, 2, 5, 0.5)
    r = rng.uniform(0, TWO_PI, size=4)
    before = dist_s(f_rot(h, r), t)
    _, g_rot, _ = dist_s_grad(f_rot(h, r), t)
    _, g_r = f_rot_vjp(h, r, g_rot)
    assert dist_s(f_rot(h, angle_step(r, g_r, 1e-3)), t) < before


def test_mcp_of_rotation_keeps_radius(rng):
    h = _shell(rng, 50, 4, 0.3)
    out = f_rot(h, rng.uniform(0, TWO_PI, size=(50, 3)))
    np.testing.assert_allclose(mcp(out).radius, 0.3, rtol=1e-12)
