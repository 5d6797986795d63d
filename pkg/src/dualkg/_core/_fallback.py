"""Pure numpy implementation of the hyperspherical kernels.

Every function works row-wise on 2-D float64 arrays; the loop runs over the
coordinate axis and vectorizes over rows. ``_kernels.pyx`` mirrors these
functions one to one.
"""

import numpy as np

TWO_PI = 2.0 * np.pi
# trailing-coordinate norm (relative to the radius) below which angles are undefined
AXIS_TOL = 1e-12
# floor on squared coordinate scale factors in the inverse-chart Jacobian
SCALE_FLOOR = 1e-12


def wrap_angles(a):
    out = np.mod(a, TWO_PI)
    out[out >= TWO_PI] = 0.0
    return out


def mpc(angles, radius):
    n, m = angles.shape
    out = np.empty((n, m + 1))
    s = np.sin(angles)
    c = np.cos(angles)
    prefix = np.array(radius, dtype=np.float64, copy=True)
    for k in range(m):
        out[:, k] = prefix * c[:, k]
        prefix = prefix * s[:, k]
    out[:, m] = prefix
    return out


def mcp(points):
    n, d = points.shape
    tail = np.sqrt(np.cumsum((points * points)[:, ::-1], axis=1)[:, ::-1])
    radius = tail[:, 0].copy()
    angles = np.empty((n, d - 1))
    for k in range(d - 2):
        angles[:, k] = np.arctan2(tail[:, k + 1], points[:, k])
    angles[:, d - 2] = np.arctan2(points[:, d - 1], points[:, d - 2])
    angles = wrap_angles(angles)
    # angle k is undefined once the coordinates from k onwards vanish
    undefined = tail[:, : d - 1] <= AXIS_TOL * radius[:, None]
    angles[undefined] = 0.0
    return angles, radius


def rotate(points, rot):
    angles, radius = mcp(points)
    out = mpc(wrap_angles(angles + rot), radius)
    identity = ~np.any(rot != 0.0, axis=1)
    out[identity] = points[identity]
    return out


def _sine_prefix(angles):
    # prefix[:, k] = prod_{j<k} sin(angles[:, j]); the norm of d u / d angle_k
    n, m = angles.shape
    s = np.sin(angles)
    prefix = np.ones((n, m))
    for k in range(1, m):
        prefix[:, k] = prefix[:, k - 1] * s[:, k - 1]
    return prefix


def _unit_vjp(angles, g):
    """Return J^T g for the unit chart u(angles); reverse recurrence, O(d)."""
    m = angles.shape[1]
    s = np.sin(angles)
    c = np.cos(angles)
    prefix = _sine_prefix(angles)
    out = np.empty_like(angles)
    q = g[:, m].copy()
    for k in range(m - 1, -1, -1):
        out[:, k] = prefix[:, k] * (c[:, k] * q - s[:, k] * g[:, k])
        q = g[:, k] * c[:, k] + s[:, k] * q
    return out


def _unit_jvp(angles, a):
    """Return J a for the unit chart u(angles); forward recurrence, O(d)."""
    n, m = angles.shape
    s = np.sin(angles)
    c = np.cos(angles)
    out = np.empty((n, m + 1))
    p = np.ones(n)
    dp = np.zeros(n)
    for k in range(m):
        out[:, k] = dp * c[:, k] - p * s[:, k] * a[:, k]
        dp, p = dp * s[:, k] + p * c[:, k] * a[:, k], p * s[:, k]
    out[:, m] = dp
    return out


def rotate_vjp(points, rot, grad_out):
    angles, radius = mcp(points)
    moved = angles + rot
    unit = mpc(moved, np.ones(len(points)))
    v = _unit_vjp(moved, grad_out)
    prefix = _sine_prefix(angles)
    scale = np.maximum(prefix * prefix, SCALE_FLOOR)
    grad_points = _unit_jvp(angles, v / scale)
    radial = np.einsum("ij,ij->i", unit, grad_out) / radius
    grad_points += radial[:, None] * points
    grad_rot = radius[:, None] * v
    return grad_points, grad_rot
