"""Manifolds used by the solvers: flat space, the hyperboloid, SPD matrices
with the affine-invariant metric, a geodesically convex spherical cap, and
products of two of these.

Points and tangent vectors are plain numpy arrays. Product points are tuples
and product tangents are :class:`ProductVector` tuples, which support the
vector-space arithmetic the solvers need.
"""
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import CapExceeded, ConfigInvalid, NonFinite, RenormalizationDrift

DRIFT_LIMIT = 1e-6


def _finite(*arrays):
    for a in arrays:
        if isinstance(a, tuple):
            _finite(*a)
        elif not np.all(np.isfinite(a)):
            raise NonFinite("input contains NaN or Inf")


def _sym(A):
    return 0.5 * (A + np.swapaxes(A, -1, -2))


@dataclass(frozen=True)
class ManifoldDescriptor:
    kind: str
    dim: int
    kappa_min: float
    kappa_max: float
    max_radius: float = math.inf


class Manifold:
    """Common interface. Subclasses fill in the geometry."""

    kind = "abstract"
    kappa_min = 0.0
    kappa_max = 0.0
    max_radius = math.inf

    @property
    def hadamard(self):
        return self.kappa_max <= 0.0

    @property
    def descriptor(self):
        return ManifoldDescriptor(self.kind, self.dim, self.kappa_min, self.kappa_max, self.max_radius)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"

    def norm(self, x, u):
        return math.sqrt(max(self.inner(x, u, u), 0.0))

    def zero(self, x):
        return np.zeros_like(x)

    def geodesic(self, x, y, t):
        return self.exp(x, t * self.log(x, y))

    def random_tangent(self, x, rng, scale=1.0):
        basis = self.tangent_basis(x)
        return self.combine(basis, scale * rng.standard_normal(len(basis)))

    def combine(self, basis, coeffs):
        return np.tensordot(np.asarray(coeffs, dtype=float), basis, axes=1)

    def stack(self, points):
        return np.stack([np.asarray(p, dtype=float) for p in points])

    def karcher_value_grad(self, x, Y, w):
        """Return sum_i w_i d(x,y_i)^2/2 and its gradient -sum_i w_i log_x(y_i)."""
        value = 0.0
        grad = self.zero(x)
        for y, wi in zip(Y, w):
            value += 0.5 * wi * self.dist(x, y) ** 2
            grad = grad - wi * self.log(x, y)
        return value, grad

    def dexp_adjoint(self, x, v, u):
        """Adjoint of the differential of Exp_x at v, applied to u at Exp_x(v).

        Constant-curvature version: the component of u along the geodesic is
        transported back unchanged, the orthogonal part is scaled by the Jacobi
        field factor.
        """
        n = self.norm(x, v)
        if n < 1e-14:
            return self.proju(x, u)
        e = v / n
        back = self.transport(self.exp(x, v), x, u)
        a = self.inner(x, back, e)
        return a * e + self._jacobi(n) * (back - a * e)


class Euclidean(Manifold):
    kind = "euclidean"

    def __init__(self, dim):
        self.dim = int(dim)

    def origin(self):
        return np.zeros(self.dim)

    def inner(self, x, u, v):
        _finite(u, v)
        return float(np.dot(u, v))

    def exp(self, x, v):
        _finite(x, v)
        return x + v

    def log(self, x, y):
        _finite(x, y)
        return y - x

    def dist(self, x, y):
        _finite(x, y)
        return float(np.linalg.norm(y - x))

    def transport(self, x, y, v):
        _finite(x, y, v)
        return np.array(v, dtype=float)

    def proju(self, x, u):
        return np.asarray(u, dtype=float)

    def projx(self, x):
        return np.asarray(x, dtype=float)

    def check_point(self, x):
        _finite(x)
        return True

    def tangent_basis(self, x):
        return np.eye(self.dim)

    def karcher_value_grad(self, x, Y, w):
        D = Y - x
        return 0.5 * float(w @ np.einsum("ij,ij->i", D, D)), -(w @ D)

    def dexp_adjoint(self, x, v, u):
        return np.asarray(u, dtype=float)


def minkowski(u, v):
    return float(np.dot(u[1:], v[1:]) - u[0] * v[0])


class Hyperbolic(Manifold):
    """Hyperboloid model of curvature -1 inside R^{dim+1}."""

    kind = "hyperbolic"
    kappa_min = -1.0
    kappa_max = -1.0

    def __init__(self, dim):
        self.dim = int(dim)

    def origin(self):
        o = np.zeros(self.dim + 1)
        o[0] = 1.0
        return o

    def projx(self, x):
        x = np.asarray(x, dtype=float)
        _finite(x)
        drift = abs(minkowski(x, x) + 1.0) / max(1.0, x[0] ** 2)
        if drift > DRIFT_LIMIT or x[0] <= 0:
            raise RenormalizationDrift(f"hyperboloid drift {drift:.3e}")
        out = x.copy()
        out[0] = math.sqrt(1.0 + float(np.dot(x[1:], x[1:])))
        return out

    def check_point(self, x):
        _finite(x)
        return abs(minkowski(x, x) + 1.0) <= 1e-10 * max(1.0, x[0] ** 2) and x[0] > 0

    def proju(self, x, u):
        return u + minkowski(x, u) * x

    def inner(self, x, u, v):
        _finite(u, v)
        return minkowski(u, v)

    def _half_gap(self, x, y):
        # s = -<x,y> - 1 computed from the difference to avoid cancellation
        diff = y - x
        return max(0.5 * minkowski(diff, diff), 0.0), diff

    def dist(self, x, y):
        _finite(x, y)
        s, _ = self._half_gap(x, y)
        return math.log1p(s + math.sqrt(s * (s + 2.0)))

    def exp(self, x, v):
        _finite(x, v)
        v = self.proju(x, v)
        n = math.sqrt(max(minkowski(v, v), 0.0))
        if n < 1e-8:
            y = x + v + 0.5 * n * n * x
        else:
            y = math.cosh(n) * x + (math.sinh(n) / n) * v
        return self.projx(y)

    def log(self, x, y):
        _finite(x, y)
        s, diff = self._half_gap(x, y)
        d = math.log1p(s + math.sqrt(s * (s + 2.0)))
        c = d / math.sinh(d) if d > 1e-8 else 1.0 - d * d / 6.0
        return self.proju(x, c * (diff - s * x))

    def transport(self, x, y, v):
        _finite(x, y, v)
        s, _ = self._half_gap(x, y)
        return self.proju(y, v + (minkowski(y, v) / (2.0 + s)) * (x + y))

    def tangent_basis(self, x):
        # move the axis vectors of the origin's tangent space to x
        B = np.zeros((self.dim, self.dim + 1))
        B[:, 1:] = np.eye(self.dim)
        o = self.origin()
        return B + np.outer(x[1:] / (1.0 + x[0]), o + x)

    def karcher_value_grad(self, x, Y, w):
        return kernels.hyperboloid_karcher(
            np.ascontiguousarray(x, dtype=float), np.ascontiguousarray(Y, dtype=float), np.ascontiguousarray(w, dtype=float)
        )

    @staticmethod
    def _jacobi(n):
        return math.sinh(n) / n


class SphericalCap(Manifold):
    """Unit sphere in R^{dim+1} restricted to a cap around the north pole.

    The cap radius stays below pi/2 so the region is uniquely geodesic and
    geodesically convex. Operations refuse to leave it.
    """

    kind = "cap"
    kappa_min = 1.0
    kappa_max = 1.0

    def __init__(self, dim, max_radius=1.2):
        if not 0 < max_radius < math.pi / 2:
            raise ConfigInvalid("cap radius must lie in (0, pi/2)")
        self.dim = int(dim)
        self.max_radius = float(max_radius)

    def __repr__(self):
        return f"SphericalCap(dim={self.dim}, max_radius={self.max_radius})"

    def origin(self):
        o = np.zeros(self.dim + 1)
        o[0] = 1.0
        return o

    @staticmethod
    def _angle(x, y):
        return 2.0 * math.atan2(float(np.linalg.norm(x - y)), float(np.linalg.norm(x + y)))

    def height(self, x):
        """Distance from the cap center."""
        return self._angle(self.origin(), x)

    def _in_cap(self, x):
        h = self.height(x)
        if h > self.max_radius * (1 + 1e-12) + 1e-12:
            raise CapExceeded(f"point at distance {h:.6g} from the pole, cap radius {self.max_radius:.6g}")

    def projx(self, x):
        x = np.asarray(x, dtype=float)
        _finite(x)
        nrm = float(np.linalg.norm(x))
        if abs(nrm - 1.0) > DRIFT_LIMIT:
            raise RenormalizationDrift(f"sphere drift {abs(nrm - 1.0):.3e}")
        return x / nrm

    def check_point(self, x):
        _finite(x)
        return abs(float(np.linalg.norm(x)) - 1.0) <= 1e-12 and self.height(x) <= self.max_radius + 1e-12

    def proju(self, x, u):
        return u - float(np.dot(x, u)) * x

    def inner(self, x, u, v):
        _finite(u, v)
        return float(np.dot(u, v))

    def dist(self, x, y):
        _finite(x, y)
        return self._angle(x, y)

    def exp(self, x, v):
        _finite(x, v)
        v = self.proju(x, v)
        n = float(np.linalg.norm(v))
        if n >= math.pi:
            raise CapExceeded("geodesic longer than pi")
        if n < 1e-8:
            y = x + v - 0.5 * n * n * x
        else:
            y = math.cos(n) * x + (math.sin(n) / n) * v
        y = self.projx(y)
        self._in_cap(y)
        return y

    def log(self, x, y):
        _finite(x, y)
        self._in_cap(x)
        self._in_cap(y)
        diff = y - x
        q = float(np.dot(diff, diff))
        d = self._angle(x, y)
        c = d / math.sin(d) if d > 1e-8 else 1.0 + d * d / 6.0
        return self.proju(x, c * (diff + 0.5 * q * x))

    def transport(self, x, y, v):
        _finite(x, y, v)
        diff = y - x
        denom = 2.0 - 0.5 * float(np.dot(diff, diff))
        return self.proju(y, v - (float(np.dot(y, v)) / denom) * (x + y))

    def tangent_basis(self, x):
        B = np.zeros((self.dim, self.dim + 1))
        B[:, 1:] = np.eye(self.dim)
        return B - np.outer(x[1:] / (1.0 + x[0]), self.origin() + x)

    def karcher_value_grad(self, x, Y, w):
        return kernels.sphere_karcher(
            np.ascontiguousarray(x, dtype=float), np.ascontiguousarray(Y, dtype=float), np.ascontiguousarray(w, dtype=float)
        )

    @staticmethod
    def _jacobi(n):
        return math.sin(n) / n


def _eigfun(S, fn):
    w, U = np.linalg.eigh(S)
    return (U * fn(w)[..., None, :]) @ np.swapaxes(U, -1, -2)


class SPD(Manifold):
    """Symmetric positive definite n x n matrices, affine-invariant metric."""

    kind = "spd"
    kappa_min = -0.5
    kappa_max = 0.0

    def __init__(self, n):
        self.n = int(n)
        self.dim = self.n * (self.n + 1) // 2

    def __repr__(self):
        return f"SPD(n={self.n})"

    def origin(self):
        return np.eye(self.n)

    @staticmethod
    def _halves(P):
        w, U = np.linalg.eigh(P)
        if w[0] <= 0:
            raise NonFinite("matrix is not positive definite")
        r = np.sqrt(w)
        return (U * r) @ U.T, (U / r) @ U.T

    def projx(self, P):
        P = np.asarray(P, dtype=float)
        _finite(P)
        scale = max(1.0, float(np.max(np.abs(P))))
        if float(np.max(np.abs(P - P.T))) > DRIFT_LIMIT * scale:
            raise RenormalizationDrift("SPD symmetry drift")
        return _sym(P)

    def check_point(self, P):
        _finite(P)
        return float(np.max(np.abs(P - P.T))) <= 1e-12 * max(1.0, float(np.max(np.abs(P)))) and np.linalg.eigvalsh(P)[0] > 0

    def proju(self, P, U):
        return _sym(np.asarray(U, dtype=float))

    def inner(self, P, U, V):
        _finite(U, V)
        A = np.linalg.solve(P, U)
        B = np.linalg.solve(P, V)
        return float(np.sum(A * B.T))

    def exp(self, P, V):
        _finite(P, V)
        Ph, Pih = self._halves(P)
        E = _eigfun(_sym(Pih @ V @ Pih), np.exp)
        return self.projx(Ph @ E @ Ph)

    def log(self, P, Q):
        _finite(P, Q)
        Ph, Pih = self._halves(P)
        S = _sym(Pih @ Q @ Pih)
        return _sym(Ph @ _eigfun(S, np.log) @ Ph)

    def dist(self, P, Q):
        _finite(P, Q)
        _, Pih = self._halves(P)
        w = np.linalg.eigvalsh(_sym(Pih @ Q @ Pih))
        return float(np.sqrt(np.sum(np.log(w) ** 2)))

    def transport(self, P, Q, V):
        _finite(P, Q, V)
        Ph, Pih = self._halves(P)
        E = Ph @ _eigfun(_sym(Pih @ Q @ Pih), np.sqrt) @ Pih
        return _sym(E @ V @ E.T)

    def _identity_basis(self):
        n = self.n
        out = []
        for i in range(n):
            for j in range(i, n):
                B = np.zeros((n, n))
                if i == j:
                    B[i, i] = 1.0
                else:
                    B[i, j] = B[j, i] = 1.0 / math.sqrt(2.0)
                out.append(B)
        return np.array(out)

    def tangent_basis(self, P):
        Ph, _ = self._halves(P)
        return Ph @ self._identity_basis() @ Ph

    def karcher_value_grad(self, P, Y, w):
        Ph, Pih = self._halves(P)
        lam, U = np.linalg.eigh(_sym(Pih @ Y @ Pih))
        ll = np.log(lam)
        value = 0.5 * float(w @ np.sum(ll**2, axis=1))
        L = np.einsum("k,kij,kj,klj->il", w, U, ll, U)
        return value, -_sym(Ph @ L @ Ph)

    def dexp_adjoint(self, P, V, B):
        Ph, Pih = self._halves(P)
        lam, U = np.linalg.eigh(_sym(Pih @ V @ Pih))
        li, lj = lam[:, None], lam[None, :]
        gap = li - lj
        close = np.abs(gap) < 1e-9
        safe = np.where(close, 1.0, gap)
        # divided differences of exp, written to avoid cancellation
        F = np.where(close, np.exp(0.5 * (li + lj)), np.exp(lj) * np.expm1(safe) / safe)
        Bt = U.T @ (Pih @ B @ Pih) @ U
        G = U @ (Bt * F * np.exp(-li - lj)) @ U.T
        return _sym(Ph @ G @ Ph)


class ProductVector(tuple):
    """Tangent vector of a product manifold with vector-space arithmetic."""

    def __new__(cls, parts):
        return super().__new__(cls, tuple(parts))

    def __add__(self, other):
        return ProductVector(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        return ProductVector(a - b for a, b in zip(self, other))

    def __neg__(self):
        return ProductVector(-a for a in self)

    def __mul__(self, c):
        return ProductVector(c * a for a in self)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return ProductVector(a / c for a in self)


class Product(Manifold):
    """Product of two manifolds with the sum metric."""

    kind = "product"

    def __init__(self, left, right):
        self.parts = (left, right)
        self.dim = left.dim + right.dim
        self.kappa_min = min(left.kappa_min, right.kappa_min, 0.0)
        self.kappa_max = max(left.kappa_max, right.kappa_max, 0.0)
        self.max_radius = min(left.max_radius, right.max_radius)

    def __repr__(self):
        return f"Product({self.parts[0]!r}, {self.parts[1]!r})"

    def origin(self):
        return tuple(M.origin() for M in self.parts)

    def zero(self, z):
        return ProductVector(M.zero(p) for M, p in zip(self.parts, z))

    def projx(self, z):
        return tuple(M.projx(p) for M, p in zip(self.parts, z))

    def check_point(self, z):
        return all(M.check_point(p) for M, p in zip(self.parts, z))

    def proju(self, z, u):
        return ProductVector(M.proju(p, a) for M, p, a in zip(self.parts, z, u))

    def inner(self, z, u, v):
        return sum(M.inner(p, a, b) for M, p, a, b in zip(self.parts, z, u, v))

    def exp(self, z, v):
        return tuple(M.exp(p, a) for M, p, a in zip(self.parts, z, v))

    def log(self, z, w):
        return ProductVector(M.log(p, q) for M, p, q in zip(self.parts, z, w))

    def dist(self, z, w):
        d1, d2 = (M.dist(p, q) for M, p, q in zip(self.parts, z, w))
        return math.sqrt(d1 * d1 + d2 * d2)

    def transport(self, z, w, v):
        return ProductVector(M.transport(p, q, a) for M, p, q, a in zip(self.parts, z, w, v))

    def tangent_basis(self, z):
        (M1, M2), (p1, p2) = self.parts, z
        z1, z2 = M1.zero(p1), M2.zero(p2)
        return [ProductVector((b, z2)) for b in M1.tangent_basis(p1)] + [
            ProductVector((z1, b)) for b in M2.tangent_basis(p2)
        ]

    def combine(self, basis, coeffs):
        out = ProductVector(np.zeros_like(a) for a in basis[0])
        for c, b in zip(coeffs, basis):
            out = out + b * float(c)
        return out

    def stack(self, points):
        return list(points)

    def dexp_adjoint(self, z, v, u):
        return ProductVector(M.dexp_adjoint(p, a, b) for M, p, a, b in zip(self.parts, z, v, u))


def uniform_tangent_ball(M, x, radius, rng):
    """Tangent vector uniformly distributed in the ball of the given radius."""
    coeffs = rng.standard_normal(M.dim)
    coeffs *= radius * rng.random() ** (1.0 / M.dim) / np.linalg.norm(coeffs)
    return M.combine(M.tangent_basis(x), coeffs)


def gaussian_point(M, center, scale, radius, rng):
    """Exp of a Gaussian tangent vector, truncated to the given radius."""
    v = M.random_tangent(center, rng, scale)
    n = M.norm(center, v)
    if n > radius:
        v = v * (radius / n)
    return M.exp(center, v)


def build(kind, dim, cap_radius=1.2):
    """Construct a manifold from its short name."""
    if kind == "euclidean":
        return Euclidean(dim)
    if kind == "hyperbolic":
        return Hyperbolic(dim)
    if kind == "spd":
        return SPD(dim)
    if kind == "cap":
        return SphericalCap(dim, cap_radius)
    raise ConfigInvalid(f"unknown manifold {kind!r}")
