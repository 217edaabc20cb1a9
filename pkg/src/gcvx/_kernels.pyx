# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Karcher kernels; same contract as ``_kernels_py``."""
import numpy as np
from libc.math cimport sqrt, log1p, sinh, sin, atan2


def hyperboloid_karcher(const double[::1] x, const double[:, ::1] Y, const double[::1] w):
    cdef Py_ssize_t n = Y.shape[0], m = Y.shape[1], i, k
    cdef double s, d, c, diff, value = 0.0, cs = 0.0, proj
    g_arr = np.zeros(m)
    cdef double[::1] g = g_arr
    for i in range(n):
        diff = Y[i, 0] - x[0]
        s = -diff * diff
        for k in range(1, m):
            diff = Y[i, k] - x[k]
            s += diff * diff
        s *= 0.5
        if s < 0.0:
            s = 0.0
        d = log1p(s + sqrt(s * (s + 2.0)))
        if d > 1e-8:
            c = w[i] * d / sinh(d)
        else:
            c = w[i] * (1.0 - d * d / 6.0)
        value += w[i] * d * d
        cs += c * s
        for k in range(m):
            g[k] -= c * (Y[i, k] - x[k])
    for k in range(m):
        g[k] += cs * x[k]
    proj = -g[0] * x[0]
    for k in range(1, m):
        proj += g[k] * x[k]
    for k in range(m):
        g[k] += proj * x[k]
    return 0.5 * value, g_arr


def sphere_karcher(const double[::1] x, const double[:, ::1] Y, const double[::1] w):
    cdef Py_ssize_t n = Y.shape[0], m = Y.shape[1], i, k
    cdef double q, p, d, c, diff, tot, value = 0.0, cq = 0.0, proj
    g_arr = np.zeros(m)
    cdef double[::1] g = g_arr
    for i in range(n):
        q = 0.0
        p = 0.0
        for k in range(m):
            diff = Y[i, k] - x[k]
            tot = Y[i, k] + x[k]
            q += diff * diff
            p += tot * tot
        d = 2.0 * atan2(sqrt(q), sqrt(p))
        if d > 1e-8:
            c = w[i] * d / sin(d)
        else:
            c = w[i] * (1.0 + d * d / 6.0)
        value += w[i] * d * d
        cq += c * q
        for k in range(m):
            g[k] -= c * (Y[i, k] - x[k])
    for k in range(m):
        g[k] -= 0.5 * cq * x[k]
    proj = 0.0
    for k in range(m):
        proj += g[k] * x[k]
    for k in range(m):
        g[k] -= proj * x[k]
    return 0.5 * value, g_arr
