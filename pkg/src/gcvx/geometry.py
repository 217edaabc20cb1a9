"""Curvature constants and the small geometric routines built on them."""
import math
from dataclasses import dataclass

from .errors import EmptyInput, LengthMismatch, NonFinite, PoleExceeded

PHI = (1.0 + math.sqrt(5.0)) / 2.0
_TAYLOR_CUTOFF = 1e-4


def _check(r):
    if not math.isfinite(r):
        raise NonFinite("radius must be finite")
    if r < 0:
        raise ValueError("radius must be nonnegative")


def zeta(r, kappa_min):
    """Smoothness distortion: t coth t with t = r sqrt(|kappa_min|), 1 if kappa_min >= 0."""
    _check(r)
    if kappa_min >= 0 or r == 0:
        return 1.0
    t = r * math.sqrt(-kappa_min)
    if t < _TAYLOR_CUTOFF:
        t2 = t * t
        return 1.0 + t2 / 3.0 - t2 * t2 / 45.0
    return t / math.tanh(t)


def delta(r, kappa_max):
    """Strong-convexity distortion: t cot t with t = r sqrt(kappa_max), 1 if kappa_max <= 0."""
    _check(r)
    if kappa_max <= 0 or r == 0:
        return 1.0
    t = r * math.sqrt(kappa_max)
    if t >= math.pi:
        raise PoleExceeded(f"r*sqrt(kappa_max) = {t:.6g} reaches the cotangent pole")
    if t < _TAYLOR_CUTOFF:
        t2 = t * t
        return 1.0 - t2 / 3.0 - t2 * t2 / 45.0
    return t / math.tan(t)


@dataclass(frozen=True)
class CurvatureConstants:
    zeta: float
    delta: float
    radius: float


def constants(manifold, r):
    return CurvatureConstants(zeta(r, manifold.kappa_min), delta(r, manifold.kappa_max), float(r))


def geodesic_average(manifold, points, weights=None):
    """Recursive weighted geodesic average of a sequence of points."""
    points = list(points)
    if not points:
        raise EmptyInput("no points to average")
    if weights is None:
        weights = [1.0] * len(points)
    weights = list(weights)
    if len(weights) != len(points):
        raise LengthMismatch(f"{len(points)} points but {len(weights)} weights")
    avg = GeodesicAverager(manifold)
    for p, w in zip(points, weights):
        avg.add(p, w)
    return avg.value


class GeodesicAverager:
    """Streaming form of the recursive average, so solvers can keep it per step."""

    def __init__(self, manifold):
        self.manifold = manifold
        self.value = None
        self.total = 0.0

    def add(self, point, weight=1.0):
        if weight <= 0:
            raise ValueError("weights must be positive")
        self.total += weight
        if self.value is None:
            self.value = point
        else:
            M = self.manifold
            self.value = M.exp(self.value, (weight / self.total) * M.log(self.value, point))
        return self.value


def project_ball(manifold, center, radius, x):
    """Metric projection onto the closed ball B(center, radius)."""
    d = manifold.dist(center, x)
    if d <= radius:
        return x
    v = manifold.log(center, x)
    return manifold.exp(center, (radius / manifold.norm(center, v)) * v)


def cosine_slacks(manifold, x, y, p, tighter=False):
    """Slacks of the two cosine-law inequalities for the triangle (x, y, p).

    Both are nonnegative on a valid triangle. The curvature constants use the
    triangle's own diameter; with ``tighter`` the upper bound uses d(p, x).
    """
    M = manifold
    dxy, dpx, dpy = M.dist(x, y), M.dist(p, x), M.dist(p, y)
    D = max(dxy, dpx, dpy)
    ip = M.inner(x, M.log(x, y), M.log(x, p))
    base = 0.5 * dpx**2 - 0.5 * dpy**2
    lower = ip - (0.5 * delta(D, M.kappa_max) * dxy**2 + base)
    upper = (0.5 * zeta(dpx if tighter else D, M.kappa_min) * dxy**2 + base) - ip
    return lower, upper


def second_difference(manifold, x, u, p, h=1e-3):
    """Second geodesic difference of d(., p)^2 / 2 at x along unit u."""
    M = manifold
    f = lambda z: 0.5 * M.dist(z, p) ** 2
    return (f(M.exp(x, h * u)) - 2.0 * f(x) + f(M.exp(x, -h * u))) / h**2


def bound_c_product(c, T):
    """prod_{t=0}^{T} 1/(1 - (t+c)^-2) by direct multiplication."""
    out = 1.0
    for t in range(T + 1):
        out /= 1.0 - (t + c) ** -2.0
    return out


def bound_c_closed(c, T):
    return c * (c + T) / ((c - 1.0) * (c + T + 1.0))

