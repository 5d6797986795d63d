"""Conversions between Cartesian points on a w-sphere and polar angles.

Convention (standard hyperspherical coordinates, d >= 2)::

    x_1 = w cos(t_1)
    x_k = w sin(t_1) ... sin(t_{k-1}) cos(t_k)      1 < k < d
    x_d = w sin(t_1) ... sin(t_{d-1})

`mcp` is the exact inverse: ``t_1 .. t_{d-2}`` land in ``[0, pi]`` and
``t_{d-1}`` in ``[0, 2 pi)``. Where trailing coordinates vanish (within
``1e-12`` of the radius) the undefined angles are set to 0.

Both functions accept a single vector or a stack of row vectors.
"""

from typing import NamedTuple

import numpy as np

from . import _core
from .errors import DegeneratePoint, DimensionMismatch, InvalidAngle

TWO_PI = 2.0 * np.pi


class AngularVector(NamedTuple):
    """Polar form of a point: ``d - 1`` angles (radians) and the radius."""

    angles: np.ndarray
    radius: np.ndarray | float


def wrap_angles(angles):
    """Reduce angles into ``[0, 2 pi)``."""
    return _core.wrap_angles(np.asarray(angles, dtype=np.float64))


def _as_rows(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise DimensionMismatch(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    single = arr.ndim == 1
    return np.ascontiguousarray(arr.reshape(1, -1) if single else arr), single


def mcp(points):
    """Cartesian -> polar.

    Parameters
    ----------
    points : array_like, shape (d,) or (n, d)

    Returns
    -------
    AngularVector
        ``angles`` of shape ``(d-1,)`` or ``(n, d-1)`` and ``radius`` equal to
        the Euclidean norm of each point.

    Raises
    ------
    DegeneratePoint
        If a point has zero norm.
    """
    rows, single = _as_rows(points, "points")
    if rows.shape[1] < 2:
        raise DimensionMismatch("polar coordinates need d >= 2")
    if not np.all(np.isfinite(rows)):
        raise DegeneratePoint("non-finite coordinates")
    angles, radius = _core.mcp(rows)
    if np.any(radius <= 0.0):
        raise DegeneratePoint("angles are undefined at the origin")
    if single:
        return AngularVector(angles[0], float(radius[0]))
    return AngularVector(angles, radius)


def mpc(angles, radius=1.0):
    """Polar -> Cartesian.

    ``angles`` may be an :class:`AngularVector`, in which case its radius is
    used. Any real angles are accepted; the output norm equals ``radius``.
    """
    if isinstance(angles, AngularVector):
        angles, radius = angles.angles, angles.radius
    rows, single = _as_rows(angles, "angles")
    if rows.shape[1] < 1:
        raise DimensionMismatch("need at least one angle")
    if not np.all(np.isfinite(rows)):
        raise InvalidAngle("angles must be finite")
    rad = np.broadcast_to(np.asarray(radius, dtype=np.float64), (rows.shape[0],))
    if np.any(rad <= 0.0):
        raise DegeneratePoint("radius must be positive")
    out = _core.mpc(rows, np.ascontiguousarray(rad))
    return out[0] if single else out
