import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dualkg.coords import AngularVector, mcp, mpc, wrap_angles
from dualkg.errors import DegeneratePoint, DimensionMismatch, InvalidAngle

TWO_PI = 2.0 * np.pi


def test_mcp_axis_point():
    a = mcp([1.0, 0.0])
    assert a.radius == 1.0
    np.testing.assert_array_equal(a.angles, [0.0])


def test_mcp_quarter_turn():
    a = mcp([0.0, 1.0])
    assert a.radius == pytest.approx(1.0)
    np.testing.assert_allclose(a.angles, [np.pi / 2], atol=1e-15)


def test_mpc_examples():
    np.testing.assert_allclose(mpc([0.0], 1.0), [1.0, 0.0])
    # standard convention: x3 = sin(a1) sin(a2)
    np.testing.assert_allclose(mpc([np.pi / 2, np.pi / 2], 1.0), [0.0, 0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(mpc(np.zeros(4), 0.3), [0.3, 0.0, 0.0, 0.0, 0.0])


def test_mpc_accepts_angular_vector():
    np.testing.assert_allclose(mpc(AngularVector(np.array([np.pi]), 2.0)), [-2.0, 0.0], atol=1e-15)


def test_random_unit_roundtrip(rng):
    p = rng.normal(size=5)
    p /= np.linalg.norm(p)
    assert np.max(np.abs(mpc(mcp(p)) - p)) < 1e-9


@pytest.mark.parametrize("d", [2, 3, 10, 50])
def test_roundtrip_bulk(d, rng):
    p = rng.normal(size=(10_000 // 4, d))
    p *= rng.uniform(1e-3, 1.0, size=(len(p), 1)) / np.linalg.norm(p, axis=1, keepdims=True)
    a = mcp(p)
    assert np.all((a.angles >= 0) & (a.angles < TWO_PI))
    np.testing.assert_allclose(a.radius, np.linalg.norm(p, axis=1), rtol=1e-12)
    assert np.max(np.abs(mpc(a) - p)) < 1e-9


def test_axis_singularity_tie_break():
    a = mcp([0.0, 0.5, 0.0, 0.0])
    np.testing.assert_allclose(a.angles, [np.pi / 2, 0.0, 0.0])
    a = mcp([-0.5, 0.0, 0.0])
    np.testing.assert_allclose(a.angles, [np.pi, 0.0])


def test_errors():
    with pytest.raises(DegeneratePoint):
        mcp([0.0, 0.0, 0.0])
    with pytest.raises(DegeneratePoint):
        mpc([0.1, 0.2], 0.0)
    with pytest.raises(InvalidAngle):
        mpc([np.nan, 0.2], 1.0)
    with pytest.raises(DimensionMismatch):
        mcp([1.0])
    with pytest.raises(DimensionMismatch):
        mcp(np.ones((2, 2, 2)))


def test_wrap_angles():
    out = wrap_angles(np.array([-0.5, TWO_PI, 3 * TWO_PI + 1.0, -1e-300]))
    assert np.all((out >= 0) & (out < TWO_PI))
    np.testing.assert_allclose(out[:3], [TWO_PI - 0.5, 0.0, 1.0], atol=1e-12)


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 12).flatmap(lambda m: arrays(np.float64, m, elements=finite)), st.floats(1e-3, 10.0))
def test_mpc_norm_equals_radius(angles, radius):
    assert abs(np.linalg.norm(mpc(angles, radius)) - radius) < 1e-9 * max(1.0, radius)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12).flatmap(lambda d: arrays(np.float64, d, elements=st.floats(-1, 1))))
def test_roundtrip_property(p):
    n = np.linalg.norm(p)
    if n < 1e-6:
        return
    p = p / max(n, 1.0)
    a = mcp(p)
    assert np.all((a.angles >= 0) & (a.angles < TWO_PI))
    assert np.max(np.abs(mpc(a) - p)) < 1e-9
