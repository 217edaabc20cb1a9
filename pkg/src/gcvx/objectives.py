"""Objectives with radius-dependent curvature constants.

Every constant is quoted on a ball B(center, r); ``center`` defaults to the
objective's ``reference`` point. Solvers ask for constants at the radius of
the ball their iterates are certified to stay in.
"""
import math

import numpy as np

from .errors import CouplingUnsupported, EmptyInput, StepRuleUnresolvable
from .geometry import delta, zeta
from .manifolds import Euclidean, Product, ProductVector


class Objective:
    smooth = True
    minimizer = None

    def __init__(self, manifold, reference):
        self.manifold = manifold
        self.reference = reference

    def _center(self, center):
        return self.reference if center is None else center

    def value(self, x):
        return self.value_and_gradient(x)[0]

    def gradient(self, x):
        return self.value_and_gradient(x)[1]

    def value_and_gradient(self, x):
        return self.value(x), self.gradient(x)

    def smoothness_on(self, r, center=None):
        raise StepRuleUnresolvable(f"{type(self).__name__} has no smoothness constant")

    def strong_convexity_on(self, r, center=None):
        return 0.0

    def lipschitz_on(self, r, center=None):
        raise StepRuleUnresolvable(f"{type(self).__name__} has no Lipschitz constant")

    def prox(self, anchor, eta):
        """Closed-form prox if one exists, else None."""
        return None


class Karcher(Objective):
    """Weighted mean of squared distances, sum_i w_i d(x, y_i)^2 / 2 (w_i = 1/n by default)."""

    def __init__(self, manifold, centers, weights=None, reference=None):
        centers = list(centers)
        if not centers:
            raise EmptyInput("Karcher objective needs at least one center")
        super().__init__(manifold, centers[0] if reference is None else reference)
        self.centers = centers
        self.Y = manifold.stack(centers)
        n = len(centers)
        self.w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
        self.total = float(self.w.sum())
        if n == 1:
            self.minimizer = centers[0]
        self._ref_spread = None

    def value_and_gradient(self, x):
        return self.manifold.karcher_value_grad(x, self.Y, self.w)

    def spread(self, center=None):
        """Largest distance from the center to a data point."""
        if center is not None:
            return max(self.manifold.dist(center, y) for y in self.centers)
        if self._ref_spread is None:
            self._ref_spread = self.spread(self.reference)
        return self._ref_spread

    # any x in B(center, r) is within r + spread of every data point
    def smoothness_on(self, r, center=None):
        return self.total * zeta(r + self.spread(center), self.manifold.kappa_min)

    def strong_convexity_on(self, r, center=None):
        return self.total * max(delta(r + self.spread(center), self.manifold.kappa_max), 0.0)

    def lipschitz_on(self, r, center=None):
        return self.total * (r + self.spread(center))

    def with_center(self, point, weight):
        """Same objective plus weight * d(., point)^2 / 2."""
        return Karcher(self.manifold, self.centers + [point], np.append(self.w, weight), self.reference)


def karcher(centers, manifold, reference=None):
    return Karcher(manifold, centers, reference=reference)


class SquaredDistance(Objective):
    """weight * d(x, p)^2 / 2."""

    def __init__(self, manifold, p, weight=1.0):
        super().__init__(manifold, p)
        self.p = p
        self.weight = float(weight)
        self.minimizer = p

    def value(self, x):
        return 0.5 * self.weight * self.manifold.dist(x, self.p) ** 2

    def gradient(self, x):
        return -self.weight * self.manifold.log(x, self.p)

    def _reach(self, r, center):
        return r + self.manifold.dist(self._center(center), self.p)

    def smoothness_on(self, r, center=None):
        return self.weight * zeta(self._reach(r, center), self.manifold.kappa_min)

    def strong_convexity_on(self, r, center=None):
        return self.weight * max(delta(self._reach(r, center), self.manifold.kappa_max), 0.0)

    def lipschitz_on(self, r, center=None):
        return self.weight * self._reach(r, center)

    def prox(self, anchor, eta):
        # the minimizer sits on the geodesic anchor -> p
        t = eta * self.weight / (1.0 + eta * self.weight)
        return self.manifold.exp(anchor, t * self.manifold.log(anchor, self.p))


def squared_distance(p, manifold, weight=1.0):
    return SquaredDistance(manifold, p, weight)


class Regularized(Objective):
    """f(x) + (eps / 2R^2) d(x0, x)^2."""

    def __init__(self, f, x0, eps, R):
        if eps <= 0 or R <= 0:
            raise ValueError("eps and R must be positive")
        super().__init__(f.manifold, f.reference)
        self.f = f
        self.x0 = x0
        self.eps = float(eps)
        self.R = float(R)
        self.coef = self.eps / self.R**2

    def value_and_gradient(self, x):
        M = self.manifold
        v, g = self.f.value_and_gradient(x)
        return v + 0.5 * self.coef * M.dist(x, self.x0) ** 2, g - self.coef * M.log(x, self.x0)

    def _reach(self, r, center):
        return r + self.manifold.dist(self._center(center), self.x0)

    def smoothness_on(self, r, center=None):
        return self.f.smoothness_on(r, center) + self.coef * zeta(self._reach(r, center), self.manifold.kappa_min)

    def strong_convexity_on(self, r, center=None):
        extra = self.coef * max(delta(self._reach(r, center), self.manifold.kappa_max), 0.0)
        return self.f.strong_convexity_on(r, center) + extra

    def lipschitz_on(self, r, center=None):
        return self.f.lipschitz_on(r, center) + self.coef * self._reach(r, center)


def regularize(f, x0, eps, R):
    return Regularized(f, x0, eps, R)


class ProximalObjective(Objective):
    """The prox subproblem h(z) = f(z) + d(z, anchor)^2 / (2 eta)."""

    def __init__(self, f, anchor, eta):
        super().__init__(f.manifold, anchor)
        self.f = f
        self.anchor = anchor
        self.eta = float(eta)
        # fold the extra term into the fast kernel when f is a Karcher objective
        self._fused = f.with_center(anchor, 1.0 / eta) if isinstance(f, Karcher) else None

    def value_and_gradient(self, x):
        if self._fused is not None:
            return self._fused.value_and_gradient(x)
        M = self.manifold
        v, g = self.f.value_and_gradient(x)
        return v + M.dist(x, self.anchor) ** 2 / (2 * self.eta), g - M.log(x, self.anchor) / self.eta

    def _reach(self, r, center):
        return r + self.manifold.dist(self._center(center), self.anchor)

    def smoothness_on(self, r, center=None):
        c = self._center(center)
        return self.f.smoothness_on(r, c) + zeta(self._reach(r, c), self.manifold.kappa_min) / self.eta

    def strong_convexity_on(self, r, center=None):
        c = self._center(center)
        own = max(delta(self._reach(r, c), self.manifold.kappa_max), 0.0) / self.eta
        return self.f.strong_convexity_on(r, c) + own


class Distance(Objective):
    """d(x, p): 1-Lipschitz, nonsmooth at p."""

    smooth = False

    def __init__(self, manifold, p):
        super().__init__(manifold, p)
        self.p = p
        self.minimizer = p

    def value(self, x):
        return self.manifold.dist(x, self.p)

    def gradient(self, x):
        v = self.manifold.log(x, self.p)
        n = self.manifold.norm(x, v)
        return self.manifold.zero(x) if n == 0 else -v / n

    def lipschitz_on(self, r, center=None):
        return 1.0


class MaxOfSquaredDistances(Objective):
    """max(d(x, p1)^2, d(x, p2)^2) / 2, minimized at the midpoint."""

    smooth = False

    def __init__(self, manifold, p1, p2):
        mid = manifold.exp(p1, 0.5 * manifold.log(p1, p2))
        super().__init__(manifold, mid)
        self.p1, self.p2 = p1, p2
        self.minimizer = mid

    def value(self, x):
        M = self.manifold
        return 0.5 * max(M.dist(x, self.p1), M.dist(x, self.p2)) ** 2

    def gradient(self, x):
        M = self.manifold
        d1, d2 = M.dist(x, self.p1), M.dist(x, self.p2)
        if d1 == d2:
            return -0.5 * (M.log(x, self.p1) + M.log(x, self.p2))
        return -M.log(x, self.p1 if d1 > d2 else self.p2)

    def lipschitz_on(self, r, center=None):
        c = self._center(center)
        return r + max(self.manifold.dist(c, self.p1), self.manifold.dist(c, self.p2))


class Constant(Objective):
    smooth = False

    def __init__(self, manifold, level=0.0, reference=None):
        super().__init__(manifold, manifold.origin() if reference is None else reference)
        self.level = float(level)

    def value(self, x):
        return self.level

    def gradient(self, x):
        return self.manifold.zero(x)

    def smoothness_on(self, r, center=None):
        return 0.0

    def lipschitz_on(self, r, center=None):
        return 0.0


class SaddleToy(Objective):
    """f(x, y) = d(x,a)^2/2 - d(y,b)^2/2 + c <x - a, y - b>, saddle point (a, b).

    The bilinear coupling is only defined when both factors are flat.
    """

    def __init__(self, left, right, a, b, coupling=0.0):
        flat = isinstance(left, Euclidean) and isinstance(right, Euclidean)
        if coupling != 0 and not flat:
            raise CouplingUnsupported("coupling needs Euclidean factors")
        super().__init__(Product(left, right), (a, b))
        self.a, self.b = a, b
        self.coupling = float(coupling)
        self.minimizer = (a, b)

    def value(self, z):
        (M, N), (x, y) = self.manifold.parts, z
        v = 0.5 * M.dist(x, self.a) ** 2 - 0.5 * N.dist(y, self.b) ** 2
        if self.coupling:
            v += self.coupling * float(np.dot(x - self.a, y - self.b))
        return v

    def partials(self, z):
        (M, N), (x, y) = self.manifold.parts, z
        gx = -M.log(x, self.a)
        gy = N.log(y, self.b)
        if self.coupling:
            gx = gx + self.coupling * (y - self.b)
            gy = gy + self.coupling * (x - self.a)
        return gx, gy

    def field(self, z):
        """(d_x f, -d_y f): the operator descent-ascent follows."""
        gx, gy = self.partials(z)
        return ProductVector((gx, -gy))

    def gradient(self, z):
        return self.field(z)

    def prox(self, anchor, eta):
        (M, N), (xb, yb) = self.manifold.parts, anchor
        if not self.coupling:
            t = eta / (1.0 + eta)
            return (M.exp(xb, t * M.log(xb, self.a)), N.exp(yb, t * N.log(yb, self.b)))
        # flat case: a 2x2 block linear system in the offsets from (a, b)
        al, c = 1.0 + 1.0 / eta, self.coupling
        den = eta * (al * al + c * c)
        X, Y = xb - self.a, yb - self.b
        return (self.a + (al * X - c * Y) / den, self.b + (c * X + al * Y) / den)

    def duality_gap(self, z):
        """max_y' f(x, y') - min_x' f(x', y), in closed form."""
        (M, N), (x, y) = self.manifold.parts, z
        return 0.5 * (1.0 + self.coupling**2) * (M.dist(x, self.a) ** 2 + N.dist(y, self.b) ** 2)

    def _reach(self, r, center):
        c = self._center(center)
        (M, N) = self.manifold.parts
        return r + max(M.dist(c[0], self.a), N.dist(c[1], self.b))

    def smoothness_on(self, r, center=None):
        z = zeta(self._reach(r, center), self.manifold.kappa_min)
        return math.sqrt(z * z + self.coupling**2)

    def strong_convexity_on(self, r, center=None):
        return max(delta(self._reach(r, center), self.manifold.kappa_max), 0.0)


def saddle_toy(a, b, coupling, left, right):
    return SaddleToy(left, right, a, b, coupling)


class ProximalSaddle(Objective):
    """f(x, y) + d(x, xbar)^2/(2 eta) - d(y, ybar)^2/(2 eta)."""

    def __init__(self, f, anchor, eta):
        super().__init__(f.manifold, anchor)
        self.f = f
        self.anchor = anchor
        self.eta = float(eta)

    def value(self, z):
        (M, N), (x, y), (xb, yb) = self.manifold.parts, z, self.anchor
        return self.f.value(z) + (M.dist(x, xb) ** 2 - N.dist(y, yb) ** 2) / (2 * self.eta)

    def field(self, z):
        (M, N), (x, y), (xb, yb) = self.manifold.parts, z, self.anchor
        gx, gy = self.f.partials(z)
        return ProductVector((gx - M.log(x, xb) / self.eta, -(gy + N.log(y, yb) / self.eta)))

    def _reach(self, r, center):
        c = self._center(center)
        return r + self.manifold.dist(c, self.anchor)

    def smoothness_on(self, r, center=None):
        c = self._center(center)
        return self.f.smoothness_on(r, c) + zeta(self._reach(r, c), self.manifold.kappa_min) / self.eta

    def strong_convexity_on(self, r, center=None):
        c = self._center(center)
        own = max(delta(self._reach(r, c), self.manifold.kappa_max), 0.0) / self.eta
        return self.f.strong_convexity_on(r, c) + own
