"""Pure numpy versions of the hot Karcher kernels.

Each kernel returns ``(value, grad)`` with value = sum_i w_i d(x, y_i)^2 / 2
and grad = -sum_i w_i log_x(y_i). Distances use the difference form so that
nearby points keep full relative precision.
"""
import numpy as np


def _ratio(d, small, f):
    # d / f(d) with the removable singularity at 0 patched by a Taylor term
    out = np.ones_like(d)
    big = d > 1e-8
    out[big] = d[big] / f(d[big])
    out[~big] = 1.0 + small * d[~big] ** 2
    return out


def hyperboloid_dists(x, Y):
    D = Y - x
    s = 0.5 * (np.einsum("ij,ij->i", D[:, 1:], D[:, 1:]) - D[:, 0] ** 2)
    s = np.maximum(s, 0.0)
    return np.log1p(s + np.sqrt(s * (s + 2.0))), D, s


def hyperboloid_karcher(x, Y, w):
    d, D, s = hyperboloid_dists(x, Y)
    c = w * _ratio(d, -1.0 / 6.0, np.sinh)
    # log_x(y) = d/sinh(d) * (y - x - s x)
    g = -(c @ D - (c @ s) * x)
    g = g + (g[1:] @ x[1:] - g[0] * x[0]) * x
    return 0.5 * float(w @ d**2), g


def sphere_dists(x, Y):
    D = Y - x
    q = np.einsum("ij,ij->i", D, D)
    P = Y + x
    p = np.sqrt(np.einsum("ij,ij->i", P, P))
    return 2.0 * np.arctan2(np.sqrt(q), p), D, q


def sphere_karcher(x, Y, w):
    d, D, q = sphere_dists(x, Y)
    c = w * _ratio(d, 1.0 / 6.0, np.sin)
    # log_x(y) = d/sin(d) * (y - x + |y - x|^2/2 x)
    g = -(c @ D + 0.5 * (c @ q) * x)
    g = g - (g @ x) * x
    return 0.5 * float(w @ d**2), g
