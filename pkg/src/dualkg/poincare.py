"""Poincare-ball (curvature -1) operations used for the ontology view.

All functions act on the last axis and broadcast over leading axes. Results
that would land within ``1e-5`` of the boundary are pulled radially back to
norm ``1 - 1e-5``. The ``*_vjp`` helpers return vector-Jacobian products
used by the analytic gradients in :mod:`dualkg.model`.
"""

import numpy as np

from .errors import NumericalDegeneracy, OutsideBall

BALL_EPS = 1e-5
MAX_NORM = 1.0 - BALL_EPS
_SERIES = 1e-3


def _norm(x):
    return np.linalg.norm(x, axis=-1, keepdims=True)


def _dot(x, y):
    return np.sum(x * y, axis=-1, keepdims=True)


def _check_inside(*points):
    for p in points:
        if np.any(_norm(p) >= 1.0):
            raise OutsideBall("point lies on or outside the unit ball")


def clip_ball(x):
    """Radially rescale rows with norm >= 1 - 1e-5 back to that norm."""
    x = np.asarray(x, dtype=np.float64)
    n = _norm(x)
    return np.where(n >= MAX_NORM, x * (MAX_NORM / np.maximum(n, MAX_NORM)), x)


def _clip_vjp(raw, grad_out):
    n = _norm(raw)
    over = n >= MAX_NORM
    if not np.any(over):
        return grad_out
    unit = raw / np.where(n == 0.0, 1.0, n)
    projected = (MAX_NORM / np.where(n == 0.0, 1.0, n)) * (grad_out - unit * _dot(unit, grad_out))
    return np.where(over, projected, grad_out)


def log0(y):
    """Logarithmic map at the origin: ``artanh(|y|) y / |y|``."""
    y = np.asarray(y, dtype=np.float64)
    _check_inside(y)
    n = _norm(y)
    scale = np.where(n < 1e-15, 1.0, np.arctanh(n) / np.where(n < 1e-15, 1.0, n))
    return scale * y


def log0_vjp(y, grad_out):
    y = np.asarray(y, dtype=np.float64)
    n = _norm(y)
    small = n < _SERIES
    ns = np.where(small, 1.0, n)
    a = np.where(n < 1e-15, 1.0, np.arctanh(n) / np.where(n < 1e-15, 1.0, n))
    # (a'(n) / n), with its series near 0
    c = np.where(small, 2.0 / 3.0 + 0.8 * n * n, (ns / (1.0 - ns * ns) - np.arctanh(ns)) / ns**3)
    return a * grad_out + c * y * _dot(y, grad_out)


def exp0(v):
    """Exponential map at the origin: ``tanh(|v|) v / |v|``, clipped to the ball."""
    v = np.asarray(v, dtype=np.float64)
    n = _norm(v)
    scale = np.where(n < 1e-15, 1.0, np.tanh(n) / np.where(n < 1e-15, 1.0, n))
    return clip_ball(scale * v)


def _sech2(x):
    # overflow-free sech^2
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def exp0_vjp(v, grad_out):
    v = np.asarray(v, dtype=np.float64)
    n = _norm(v)
    small = n < _SERIES
    ns = np.where(small, 1.0, n)
    b = np.where(n < 1e-15, 1.0, np.tanh(n) / np.where(n < 1e-15, 1.0, n))
    g = _clip_vjp(b * v, grad_out)
    c = np.where(
        small,
        -2.0 / 3.0 + (8.0 / 15.0) * n * n,
        (ns * _sech2(ns) - np.tanh(ns)) / ns**3,
    )
    return b * g + c * v * _dot(v, g)


def _mobius_parts(x, y):
    xy = _dot(x, y)
    x2 = _dot(x, x)
    y2 = _dot(y, y)
    num = (1.0 + 2.0 * xy + y2) * x + (1.0 - x2) * y
    den = 1.0 + 2.0 * xy + x2 * y2
    if np.any(np.abs(den) < 1e-15):
        raise NumericalDegeneracy("Mobius addition denominator vanished")
    return xy, x2, y2, num, den


def mobius_add(x, y):
    """Mobius addition ``x (+) y`` on the Poincare ball."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _, _, _, num, den = _mobius_parts(x, y)
    return clip_ball(num / den)


def mobius_add_vjp(x, y, grad_out):
    """Return ``(grad_x, grad_y)`` for ``mobius_add(x, y)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xy, x2, y2, num, den = _mobius_parts(x, y)
    g = _clip_vjp(num / den, grad_out)
    gx_dot = _dot(g, x)
    gy_dot = _dot(g, y)
    g_num = _dot(g, num)
    gx = (1.0 + 2.0 * xy + y2) * g + 2.0 * gx_dot * y - 2.0 * gy_dot * x
    gy = 2.0 * gx_dot * (x + y) + (1.0 - x2) * g
    dden_x = 2.0 * y + 2.0 * y2 * x
    dden_y = 2.0 * x + 2.0 * x2 * y
    return gx / den - g_num / den**2 * dden_x, gy / den - g_num / den**2 * dden_y


def mobius_matvec(m, x):
    """``exp0(M log0(x))``; a 1-D ``m`` is read as a diagonal matrix."""
    m = np.asarray(m, dtype=np.float64)
    v = log0(x)
    if m.ndim == v.ndim:
        return exp0(m * v)
    return exp0(np.einsum("...ij,...j->...i", m, v))


def _conformal_gap(x, y):
    x2 = _dot(x, x)[..., 0]
    y2 = _dot(y, y)[..., 0]
    diff = x - y
    delta = np.sum(diff * diff, axis=-1)
    alpha = 1.0 - x2
    beta = 1.0 - y2
    if np.any(alpha <= 0.0) or np.any(beta <= 0.0):
        raise OutsideBall("point lies on or outside the unit ball")
    return 2.0 * delta / (alpha * beta), diff, delta, alpha, beta


def dist_h(x, y):
    """Hyperbolic geodesic distance ``arccosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2)))``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    t, *_ = _conformal_gap(x, y)
    # arccosh(1 + t) without cancellation for small t
    return np.log1p(t + np.sqrt(t * (t + 2.0)))


def _gap_grads(x, y, diff, delta, alpha, beta):
    ab = (alpha * beta)[..., None]
    dx = 4.0 * diff / ab + 4.0 * (delta / (alpha**2 * beta))[..., None] * x
    dy = -4.0 * diff / ab + 4.0 * (delta / (alpha * beta**2))[..., None] * y
    return dx, dy


def dist_h_grad(x, y):
    """Return ``(dist, d/dx, d/dy)``; the arccosh argument is floored at 1 + 1e-15."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    t, diff, delta, alpha, beta = _conformal_gap(x, y)
    dist = np.log1p(t + np.sqrt(t * (t + 2.0)))
    tc = np.maximum(t, 1e-15)
    slope = (1.0 / np.sqrt(tc * (tc + 2.0)))[..., None]
    dx, dy = _gap_grads(x, y, diff, delta, alpha, beta)
    return dist, slope * dx, slope * dy


def sqdist_h_grad(x, y):
    """Return ``(dist^2, d/dx, d/dy)``; smooth at ``x == y``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    t, diff, delta, alpha, beta = _conformal_gap(x, y)
    dist = np.log1p(t + np.sqrt(t * (t + 2.0)))
    # d(dist^2)/dt = 2 arccosh(1+t) / sqrt(t (t+2)) -> 2 as t -> 0
    small = t < 1e-12
    ts = np.where(small, 1.0, t)
    ratio = np.where(small, 1.0 - t / 3.0, dist / np.sqrt(ts * (ts + 2.0)))
    dx, dy = _gap_grads(x, y, diff, delta, alpha, beta)
    slope = (2.0 * ratio)[..., None]
    return dist**2, slope * dx, slope * dy


def murp_score(head, stretch, translation, tail, b_head=0.0, b_tail=0.0):
    """MuRP plausibility (higher is better).

    ``-dist_h(exp0(R log0(head)), tail (+) translation)^2 + b_head + b_tail``
    with ``R = diag(stretch)``.
    """
    mapped = exp0(np.asarray(stretch) * log0(head))
    target = mobius_add(tail, translation)
    return -dist_h(mapped, target) ** 2 + b_head + b_tail


def murp_score_grad(head, stretch, translation, tail, b_head=0.0, b_tail=0.0):
    """Score and gradients of :func:`murp_score`.

    Returns ``(score, grads)`` where ``grads`` has keys ``head``, ``stretch``,
    ``translation``, ``tail``, ``b_head``, ``b_tail``.
    """
    head = np.asarray(head, dtype=np.float64)
    stretch = np.asarray(stretch, dtype=np.float64)
    v = log0(head)
    u = stretch * v
    mapped = exp0(u)
    target = mobius_add(tail, translation)
    sq, g_mapped, g_target = sqdist_h_grad(mapped, target)
    score = -sq + b_head + b_tail
    g_u = exp0_vjp(u, -g_mapped)
    g_tail, g_trans = mobius_add_vjp(tail, translation, -g_target)
    ones = np.ones_like(score)
    grads = {
        "head": log0_vjp(head, g_u * stretch),
        "stretch": g_u * v,
        "translation": g_trans,
        "tail": g_tail,
        "b_head": ones,
        "b_tail": ones,
    }
    return score, grads


def ball_step(x, g, lr, pinned=False):
    """Conformally rescaled gradient step ``x - lr ((1 - |x|^2)/2)^2 g``.

    The result is clipped into the ball; ``pinned`` re-zeroes the last
    coordinate (points living on the Poincare disk).
    """
    x = np.asarray(x, dtype=np.float64)
    factor = ((1.0 - _dot(x, x)) / 2.0) ** 2
    out = clip_ball(x - lr * factor * np.asarray(g, dtype=np.float64))
    if pinned:
        out[..., -1] = 0.0
    return out


def stretch_step(r, g, lr):
    """Plain gradient step on a diagonal stretch.

    The diagonal lives in R^d rather than in the ball, so no conformal
    factor is applied.
    """
    return np.asarray(r, dtype=np.float64) - lr * np.asarray(g, dtype=np.float64)


def bias_step(b, g, lr):
    """Plain SGD on scalar biases."""
    return b - lr * g
