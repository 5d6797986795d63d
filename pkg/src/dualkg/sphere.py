"""Operations on the fixed-norm sphere used for instance-view entities.

Points are plain numpy arrays (a single ``(d,)`` vector or an ``(n, d)``
stack); the shell norm ``w`` is passed explicitly where it matters.
Rotations are angle vectors of length ``d - 1`` applied in polar form.
"""

import numpy as np

from . import _core
from .coords import wrap_angles
from .errors import DegeneratePoint, DimensionMismatch

# arccos argument clamp used by gradients
COS_CLAMP = 1.0 - 1e-12
# radial tolerance for treating a point as already on the shell
# rows within this many ulps of the shell count as on it
SHELL_ULPS = 4


def _rows(x):
    arr = np.asarray(x, dtype=np.float64)
    return np.ascontiguousarray(np.atleast_2d(arr)), arr.ndim == 1


def _unit(x):
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise DegeneratePoint("zero vector has no direction")
    return x / norm, norm


def dist_s(x, y):
    """Geodesic angle between two points on a common shell, in ``[0, pi]``.

    Both points are normalized first, so the result is the great-circle
    distance on the unit sphere; on a shell of radius ``w`` the arc length is
    ``w`` times this value.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[-1] != y.shape[-1]:
        raise DimensionMismatch(f"dimensions differ: {x.shape[-1]} vs {y.shape[-1]}")
    xu, _ = _unit(x)
    yu, _ = _unit(y)
    cos = np.clip(np.sum(xu * yu, axis=-1), -1.0, 1.0)
    return np.arccos(cos)


def dist_s_grad(x, y):
    """Return ``(dist, d dist/dx, d dist/dy)`` (Euclidean gradients)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xu, xn = _unit(x)
    yu, yn = _unit(y)
    cos = np.sum(xu * yu, axis=-1, keepdims=True)
    dist = np.arccos(np.clip(cos, -1.0, 1.0))[..., 0]
    c = np.clip(cos, -COS_CLAMP, COS_CLAMP)
    scale = -1.0 / np.sqrt(1.0 - c * c)
    gx = scale * (yu - cos * xu) / xn
    gy = scale * (xu - cos * yu) / yn
    return dist, gx, gy


def f_rot(h, angles):
    """Rotate ``h`` by adding ``angles`` to its polar angles (mod 2 pi).

    The radius is preserved, so the image stays on the same shell. An
    all-zero rotation returns ``h`` unchanged.
    """
    rows, single = _rows(h)
    rot, _ = _rows(angles)
    if rot.shape[1] != rows.shape[1] - 1:
        raise DimensionMismatch(
            f"rotation has {rot.shape[1]} angles for a point of dimension {rows.shape[1]}"
        )
    if rot.shape[0] == 1 and rows.shape[0] > 1:
        rot = np.ascontiguousarray(np.broadcast_to(rot, (rows.shape[0], rot.shape[1])))
    if np.any(np.linalg.norm(rows, axis=1) == 0.0):
        raise DegeneratePoint("cannot rotate the origin")
    out = _core.rotate(rows, rot)
    return out[0] if single else out


def f_rot_batch(h, rotations):
    """Apply each of ``K`` rotations to the single point ``h``; returns ``(K, d)``."""
    h = np.asarray(h, dtype=np.float64)
    rotations = np.asarray(rotations, dtype=np.float64)
    if rotations.size == 0:
        return np.empty((0, h.shape[-1]))
    rotations = np.atleast_2d(rotations)
    if rotations.shape[1] != h.shape[-1] - 1:
        raise DimensionMismatch("all rotations must have d - 1 angles")
    heads = np.ascontiguousarray(np.broadcast_to(h, (len(rotations), h.shape[-1])))
    return f_rot(heads, rotations)


def f_rot_vjp(h, angles, grad_out):
    """Pull an output gradient back through :func:`f_rot`.

    Returns ``(grad_h, grad_angles)``. The chart Jacobian is singular where
    the point is axis-aligned; squared scale factors are floored at 1e-12.
    """
    rows, single = _rows(h)
    rot, _ = _rows(angles)
    g, _ = _rows(grad_out)
    gh, ga = _core.rotate_vjp(rows, rot, g)
    if single:
        return gh[0], ga[0]
    return gh, ga


def proj_s(z, w):
    """Rescale ``z`` onto the shell of radius ``w``.

    Rows already on the shell up to rounding are returned unchanged, so
    repeated projection is exactly idempotent.
    """
    z = np.asarray(z, dtype=np.float64)
    norm = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise DegeneratePoint("cannot project the zero vector onto a sphere")
    on_shell = np.abs(norm - w) <= SHELL_ULPS * np.finfo(np.float64).eps * np.abs(w)
    return np.where(on_shell, z, w * z / norm)


def proj_ring(z, radius):
    """Project onto the ring ``{x : x_d = 0, |x| = radius}``."""
    z = np.array(z, dtype=np.float64, copy=True)
    z[..., -1] = 0.0
    return proj_s(z, radius)


def proj_ring_vjp(z, radius, grad_out):
    """Gradient of :func:`proj_ring` w.r.t. ``z`` and the ring radius."""
    flat = np.array(z, dtype=np.float64, copy=True)
    flat[..., -1] = 0.0
    unit, norm = _unit(flat)
    radial = np.sum(unit * grad_out, axis=-1, keepdims=True)
    gz = (radius / norm) * (grad_out - unit * radial)
    gz[..., -1] = 0.0
    return gz, radial[..., 0]


def riemannian_factor(h, g):
    """Rescaled tangent direction ``(1 + h.g/|g|) (I - h h^T) g``.

    Returns zeros when ``|g| < 1e-15``.
    """
    h = np.asarray(h, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    gnorm = np.linalg.norm(g, axis=-1, keepdims=True)
    hg = np.sum(h * g, axis=-1, keepdims=True)
    safe = np.where(gnorm < 1e-15, 1.0, gnorm)
    direction = (1.0 + hg / safe) * (g - h * hg)
    return np.where(gnorm < 1e-15, 0.0, direction)


def sphere_step(h, g, lr, w=None):
    """One RSGD step: move along the rescaled tangent direction, then retract.

    ``w`` defaults to the current norm of ``h``.
    """
    h = np.asarray(h, dtype=np.float64)
    if w is None:
        w = np.linalg.norm(h, axis=-1, keepdims=True)
    moved = h - lr * riemannian_factor(h, g)
    return proj_s(moved, w)


def angle_step(angles, g, lr):
    """Gradient step on rotation angles followed by reduction into [0, 2 pi).

    The angle torus is flat, so the Euclidean gradient is already the
    Riemannian one.
    """
    angles = np.asarray(angles, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if angles.shape != g.shape:
        raise DimensionMismatch(f"gradient shape {g.shape} != angles shape {angles.shape}")
    return wrap_angles(angles - lr * g)
