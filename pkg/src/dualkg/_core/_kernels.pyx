# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hyperspherical kernels; same contracts as ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, atan2, sqrt, fmod, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI
cdef double AXIS_TOL = 1e-12
cdef double SCALE_FLOOR = 1e-12


cdef inline double _wrap(double a) nogil:
    cdef double w = fmod(a, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    if w >= TWO_PI:
        w = 0.0
    return w


def wrap_angles(a):
    cdef cnp.ndarray[double, ndim=1] flat = np.array(a, dtype=np.float64).ravel()
    cdef Py_ssize_t i, n = flat.shape[0]
    with nogil:
        for i in range(n):
            flat[i] = _wrap(flat[i])
    return flat.reshape(np.shape(a))


cdef void _mpc_row(const double[:] ang, double radius, double[:] out) noexcept nogil:
    cdef Py_ssize_t k, m = ang.shape[0]
    cdef double prefix = radius
    for k in range(m):
        out[k] = prefix * cos(ang[k])
        prefix = prefix * sin(ang[k])
    out[m] = prefix


cdef double _mcp_row(const double[:] x, double[:] ang, double[:] tail) noexcept nogil:
    cdef Py_ssize_t k, d = x.shape[0]
    cdef double acc = 0.0, radius
    for k in range(d - 1, -1, -1):
        acc += x[k] * x[k]
        tail[k] = sqrt(acc)
    radius = tail[0]
    for k in range(d - 2):
        ang[k] = _wrap(atan2(tail[k + 1], x[k]))
    ang[d - 2] = _wrap(atan2(x[d - 1], x[d - 2]))
    for k in range(d - 1):
        if tail[k] <= AXIS_TOL * radius:
            ang[k] = 0.0
    return radius


def mpc(angles, radius):
    cdef const double[:, :] a = np.ascontiguousarray(angles, dtype=np.float64)
    cdef Py_ssize_t i, n = a.shape[0]
    cdef const double[:] r = np.ascontiguousarray(np.broadcast_to(np.asarray(radius, dtype=np.float64), (n,)))
    out = np.empty((n, a.shape[1] + 1))
    cdef double[:, :] o = out
    with nogil:
        for i in range(n):
            _mpc_row(a[i], r[i], o[i])
    return out


def mcp(points):
    cdef const double[:, :] x = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t i, n = x.shape[0], d = x.shape[1]
    angles = np.empty((n, d - 1))
    radius = np.empty(n)
    cdef double[:, :] a = angles
    cdef double[:] r = radius
    cdef double[:] tail = np.empty(d)
    with nogil:
        for i in range(n):
            r[i] = _mcp_row(x[i], a[i], tail)
    return angles, radius


def rotate(points, rot):
    cdef const double[:, :] x = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, :] rr = np.ascontiguousarray(rot, dtype=np.float64)
    cdef Py_ssize_t i, k, n = x.shape[0], d = x.shape[1]
    out = np.empty((n, d))
    cdef double[:, :] o = out
    cdef double[:] ang = np.empty(d - 1)
    cdef double[:] tail = np.empty(d)
    cdef double radius
    cdef bint identity
    with nogil:
        for i in range(n):
            identity = True
            for k in range(d - 1):
                if rr[i, k] != 0.0:
                    identity = False
                    break
            if identity:
                for k in range(d):
                    o[i, k] = x[i, k]
                continue
            radius = _mcp_row(x[i], ang, tail)
            for k in range(d - 1):
                ang[k] = _wrap(ang[k] + rr[i, k])
            _mpc_row(ang, radius, o[i])
    return out


def rotate_vjp(points, rot, grad_out):
    cdef const double[:, :] x = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, :] rr = np.ascontiguousarray(rot, dtype=np.float64)
    cdef const double[:, :] g = np.ascontiguousarray(grad_out, dtype=np.float64)
    cdef Py_ssize_t i, k, n = x.shape[0], d = x.shape[1], m = d - 1
    grad_points = np.empty((n, d))
    grad_rot = np.empty((n, m))
    cdef double[:, :] gx = grad_points
    cdef double[:, :] gr = grad_rot
    cdef double[:] ang = np.empty(m)
    cdef double[:] moved = np.empty(m)
    cdef double[:] tail = np.empty(d)
    cdef double[:] v = np.empty(m)
    cdef double radius, q, p, dp, dp_next, s, c, a, radial, pre, prefix_k
    with nogil:
        for i in range(n):
            radius = _mcp_row(x[i], ang, tail)
            for k in range(m):
                moved[k] = ang[k] + rr[i, k]
            # reverse sweep: v = J_u(moved)^T g, plus u(moved) . g
            p = 1.0
            for k in range(m):
                tail[k] = p          # reuse as prefix of sines at `moved`
                p = p * sin(moved[k])
            radial = p * g[i, m]
            q = g[i, m]
            for k in range(m - 1, -1, -1):
                s = sin(moved[k])
                c = cos(moved[k])
                v[k] = tail[k] * (c * q - s * g[i, k])
                radial += tail[k] * c * g[i, k]
                q = g[i, k] * c + s * q
            for k in range(m):
                gr[i, k] = radius * v[k]
            # forward sweep: J_u(angles) diag(1 / prefix^2) v
            p = 1.0
            dp = 0.0
            for k in range(m):
                s = sin(ang[k])
                c = cos(ang[k])
                pre = p * p
                if pre < SCALE_FLOOR:
                    pre = SCALE_FLOOR
                a = v[k] / pre
                gx[i, k] = dp * c - p * s * a
                dp_next = dp * s + p * c * a
                p = p * s
                dp = dp_next
            gx[i, m] = dp
            radial = radial / radius
            for k in range(d):
                gx[i, k] += radial * x[i, k]
    return grad_points, grad_rot
