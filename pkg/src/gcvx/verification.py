"""Independent oracles and the property checks behind ``gcvx verify``.

Every check samples inside the balls where the property is claimed, takes the
worst case over samples and returns :class:`CheckReport` objects. A check
never raises on a failed property; numerical errors inside a check become a
failed report with an infinite violation.
"""
import json
import math
import sys
import zlib
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import Diverged, GcvxError, NonFinite
from .geometry import (
    bound_c_closed,
    bound_c_product,
    cosine_slacks,
    delta,
    geodesic_average,
    project_ball,
    second_difference,
    zeta,
)
from .manifolds import SPD, Euclidean, Hyperbolic, Product, ProductVector, SphericalCap, gaussian_point
from .objectives import (
    Constant,
    Distance,
    Karcher,
    MaxOfSquaredDistances,
    ProximalObjective,
    SaddleToy,
    SquaredDistance,
    regularize,
)
from .proximal import CRGD, EXACT, PRGD, RGDA, InexactnessBudget, ProxProblem, moreau, moreau_value, prox_solve, rippa, rppa
from .solvers import (
    RGD_INVERSE_L,
    RGD_INVERSE_L_ZETA,
    RIPPA,
    RPPA_EXACT,
    SUBGRADIENT,
    StepRule,
    certified_radius,
    rgd,
    subgradient_rgd,
)


@dataclass
class CheckReport:
    name: str
    samples: int
    max_violation: float
    tolerance: float
    passed: bool
    notes: str = ""

    @classmethod
    def make(cls, name, samples, violation, tolerance, notes=""):
        violation = float(violation)
        ok = math.isfinite(violation) and violation <= tolerance
        return cls(name, int(samples), violation, float(tolerance), ok, notes)

    def with_tolerance(self, tol):
        ok = math.isfinite(self.max_violation) and self.max_violation <= tol
        return replace(self, tolerance=float(tol), passed=ok)


# ---- oracles ----------------------------------------------------------------------


def fd_gradient(f, x, h=1e-4, manifold=None):
    """Central geodesic differences along an orthonormal tangent basis."""
    if not 1e-6 <= h <= 1e-2:
        raise ValueError("h must lie in [1e-6, 1e-2]")
    M = manifold if manifold is not None else f.manifold
    value = f.value if hasattr(f, "value") else f
    basis = M.tangent_basis(x)
    coeffs = [(value(M.exp(x, h * b)) - value(M.exp(x, -h * b))) / (2 * h) for b in basis]
    if not np.all(np.isfinite(coeffs)):
        raise NonFinite("finite difference produced a non-finite value")
    return M.combine(basis, coeffs)


def brute_prox(f, anchor, eta, strategy="deep", max_steps=10_000, tol=1e-11):
    """Prox point by a slow, self-contained method.

    ``strategy='closed'`` uses the weighted mean formula (flat Karcher or
    squared distance objectives only). ``'deep'`` runs plain gradient descent
    with an adaptive backtracking step until ||eta grad f(p) - log_p(anchor)|| <= tol.
    """
    M = f.manifold
    if strategy == "closed":
        if not isinstance(M, Euclidean):
            raise ValueError("closed-form prox needs a flat manifold")
        if isinstance(f, Karcher):
            Y, w = np.asarray(f.Y), f.w
            return (w @ Y + anchor / eta) / (w.sum() + 1.0 / eta)
        if isinstance(f, SquaredDistance):
            return (f.weight * f.p + anchor / eta) / (f.weight + 1.0 / eta)
        raise ValueError(f"no closed form for {type(f).__name__}")

    def h(p):
        v, g = f.value_and_gradient(p)
        return v + M.dist(p, anchor) ** 2 / (2 * eta), g - M.log(p, anchor) / eta

    p = anchor
    val, g = h(p)
    step = eta / 2.0
    for _ in range(max_steps):
        gn = M.norm(p, g)
        if eta * gn <= tol:
            return p
        while True:
            q = M.exp(p, -step * g)
            qv, qg = h(q)
            decrease = qv <= val - 0.25 * step * gn * gn
            stalled = abs(qv - val) <= 1e-12 * max(1.0, abs(val)) and M.norm(q, qg) < gn
            if decrease or stalled or step < 1e-14:
                break
            step *= 0.5
        p, val, g = q, qv, qg
        step *= 1.5
    raise Diverged(f"brute prox did not reach {tol:g} in {max_steps} steps")


# ---- sampling helpers -------------------------------------------------------------


def _rng(seed, name):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])))


def _manifolds(hyper_dim=3):
    return [Euclidean(3), Hyperbolic(hyper_dim), SPD(3), SphericalCap(3, 1.2)]


def _radius(M, flat=1.5):
    # keep every sampled configuration well inside the cap
    return 0.35 if isinstance(M, SphericalCap) else flat


def _point(M, rng, radius, center=None):
    center = M.origin() if center is None else center
    return gaussian_point(M, center, radius / math.sqrt(M.dim), radius, rng)


def _unit(M, x, rng):
    v = M.random_tangent(x, rng)
    return v / M.norm(x, v)


def _karcher(M, rng, n=5, radius=None):
    radius = _radius(M) if radius is None else radius
    centers = [_point(M, rng, radius) for _ in range(n)]
    w = rng.uniform(0.5, 1.5, n)
    return Karcher(M, centers, w / w.sum(), reference=M.origin())


def _minimizer(f, start=None):
    M = f.manifold
    start = f.reference if start is None else start
    tr = rgd(f, start, StepRule.inverse_l(radius=2.0 * f.spread() + 1.0, center=start), 100_000, keep_every=0, grad_tol=1e-14)
    return tr.last, tr.f_values[-1]


def _kind(M):
    return M.kind


# ---- manifold and geometry checks -------------------------------------------------


def check_roundtrip(rng, samples):
    out = []
    for M in _manifolds():
        worst = 0.0
        for _ in range(samples):
            if isinstance(M, SphericalCap):
                x = _point(M, rng, 0.3)
                v = _unit(M, x, rng) * rng.uniform(0, M.max_radius - 0.31)
            else:
                x = _point(M, rng, 1.5)
                v = _unit(M, x, rng) * rng.uniform(0, 5.0)
            n = M.norm(x, v)
            y = M.exp(x, v)
            back = M.log(x, y)
            err = max(abs(M.dist(x, y) - n), M.norm(x, back - v)) / (1 + n)
            worst = max(worst, err)
        out.append(CheckReport.make(f"roundtrip[{_kind(M)}]", samples, worst, 1e-7, "exp then log returns the tangent vector"))
    return out


def check_transport(rng, samples):
    out = []
    for M in _manifolds():
        r = _radius(M)
        worst = 0.0
        for _ in range(samples):
            x, y = _point(M, rng, r), _point(M, rng, r)
            u, v = M.random_tangent(x, rng), M.random_tangent(x, rng)
            a = M.inner(y, M.transport(x, y, u), M.transport(x, y, v))
            worst = max(worst, abs(a - M.inner(x, u, v)) / (M.norm(x, u) * M.norm(x, v)))
        out.append(CheckReport.make(f"transport_isometry[{_kind(M)}]", samples, worst, 1e-9, "transport preserves inner products"))
    return out


def check_hadamard_contraction(rng, samples):
    out = []
    for M in _manifolds():
        if not M.hadamard:
            continue
        worst = -math.inf
        for _ in range(samples):
            x, y, z = (_point(M, rng, 2.0) for _ in range(3))
            worst = max(worst, M.norm(z, M.log(z, x) - M.log(z, y)) - M.dist(x, y))
        out.append(CheckReport.make(f"log_contraction[{_kind(M)}]", samples, worst, 1e-9, "log maps contract distances without positive curvature"))
    return out


def check_product_distance(rng, samples):
    P = Product(Hyperbolic(2), SPD(2))
    worst = 0.0
    for _ in range(samples):
        z, w = _point(P, rng, 2.0), _point(P, rng, 2.0)
        d1, d2 = (M.dist(a, b) for M, a, b in zip(P.parts, z, w))
        worst = max(worst, abs(P.dist(z, w) ** 2 - (d1 * d1 + d2 * d2)))
    return [CheckReport.make("product_distance", samples, worst, 1e-12, "factor distances add in quadrature")]


def check_zeta_monotone(rng, samples):
    worst = -math.inf
    for _ in range(samples):
        r1, r2 = np.sort(rng.uniform(0, 4, 2))
        kmin, kmax = -rng.uniform(0, 3), rng.uniform(0, 0.5)
        dz = zeta(r1, kmin) - zeta(r2, kmin)
        dd = delta(r2, kmax) - delta(r1, kmax)
        worst = max(worst, dz, dd)
    return [CheckReport.make("distortion_monotone", samples, worst, 1e-12, "zeta grows and delta shrinks with the radius")]


def check_zeta_bracket(rng, samples):
    worst = -math.inf
    for _ in range(samples):
        r, kmin = rng.uniform(0, 10), -rng.uniform(1e-3, 4)
        t, z = r * math.sqrt(-kmin), zeta(r, kmin)
        worst = max(worst, t - z, z - t - 1.0)
    return [CheckReport.make("zeta_bracket", samples, worst, 1e-12, "zeta within one of r sqrt|kappa|")]


def check_cosine(rng, samples):
    out = []
    for M in _manifolds():
        r = 0.6 if isinstance(M, SphericalCap) else 2.0
        worst = 0.0
        for _ in range(samples):
            x, y, p = (_point(M, rng, r) for _ in range(3))
            lo, hi = cosine_slacks(M, x, y, p)
            worst = max(worst, -lo, -hi)
        out.append(CheckReport.make(f"cosine_slacks[{_kind(M)}]", samples, worst, 1e-8, "both cosine-law inequalities hold"))
    return out


def check_average_convexity(rng, samples):
    out = []
    for M in _manifolds():
        r = _radius(M)
        worst = -math.inf
        for _ in range(samples):
            f = _karcher(M, rng, 4, r)
            k = int(rng.integers(2, 6))
            pts = [_point(M, rng, r) for _ in range(k)]
            w = rng.uniform(0.2, 1.0, k)
            avg = geodesic_average(M, pts, w)
            bound = sum(wi * f.value(p) for wi, p in zip(w, pts)) / w.sum()
            worst = max(worst, f.value(avg) - bound)
        out.append(CheckReport.make(f"average_convexity[{_kind(M)}]", samples, worst, 1e-9, "objective at the geodesic average below the mean value"))
    return out


def check_hessian_sandwich(rng, samples):
    out = []
    h = 1e-3
    for M in _manifolds():
        r = 0.6 if isinstance(M, SphericalCap) else 2.0
        worst = -math.inf
        for _ in range(samples):
            x, p = _point(M, rng, r), _point(M, rng, r)
            u = _unit(M, x, rng)
            D = M.dist(x, p) + h
            s = second_difference(M, x, u, p, h)
            worst = max(worst, delta(D, M.kappa_max) - s, s - zeta(D, M.kappa_min))
        out.append(CheckReport.make(f"hessian_sandwich[{_kind(M)}]", samples, worst, 5e-4, "second difference of half squared distance"))
    return out


def check_bound_c(rng, samples):
    worst = 0.0
    count = 0
    for c in (2, 3, 5):
        for T in range(0, 1001):
            a, b = bound_c_product(c, T), bound_c_closed(c, T)
            worst = max(worst, abs(a - b) / b)
            count += 1
    return [CheckReport.make("bound_c_identity", count, worst, 1e-12, "telescoping product equals its closed form")]


# ---- objective checks -------------------------------------------------------------


def _objectives(M, rng):
    r = _radius(M)
    f = _karcher(M, rng, 5, r)
    p, q = _point(M, rng, r), _point(M, rng, r)
    out = [
        ("karcher", f),
        ("squared_distance", SquaredDistance(M, p, 1.7)),
        ("regularized", regularize(f, q, 0.3, 2.0)),
        ("distance", Distance(M, p)),
        ("max_squared", MaxOfSquaredDistances(M, p, q)),
        ("proximal", ProximalObjective(f, q, 0.7)),
        ("constant", Constant(M, 2.5)),
    ]
    if isinstance(M, Euclidean):
        out.append(("saddle", SaddleToy(M, M, p, q, 0.5)))
    elif M.hadamard:
        out.append(("saddle", SaddleToy(M, M, p, q, 0.0)))
    return out


def check_gradients(rng, samples):
    out = []
    for M in _manifolds():
        r = _radius(M)
        worst, count = 0.0, 0
        for name, f in _objectives(M, rng):
            P = f.manifold
            for _ in range(samples):
                x = _point(P, rng, r)
                g = ProductVector(f.partials(x)) if isinstance(f, SaddleToy) else f.gradient(x)
                err = P.norm(x, fd_gradient(f, x, 1e-4) - g) / (1 + P.norm(x, g))
                worst = max(worst, err)
                count += 1
        out.append(CheckReport.make(f"gradient_fd[{_kind(M)}]", count, worst, 1e-5, "analytic gradients of every objective"))
    return out


def check_midpoint_convexity(rng, samples):
    out = []
    for M in _manifolds():
        if not M.hadamard:
            continue
        worst = -math.inf
        for _ in range(samples):
            f = _karcher(M, rng, 4)
            p = _point(M, rng, 1.5)
            for g in (f, SquaredDistance(M, p), regularize(f, p, 0.5, 1.0)):
                x, y = _point(M, rng, 2.0), _point(M, rng, 2.0)
                mid = M.geodesic(x, y, 0.5)
                worst = max(worst, g.value(mid) - 0.5 * (g.value(x) + g.value(y)))
        out.append(CheckReport.make(f"midpoint_convexity[{_kind(M)}]", 3 * samples, worst, 1e-9, "value at the midpoint below the chord"))
    return out


def check_strong_convexity(rng, samples):
    out = []
    for M in _manifolds():
        r = 0.3 if isinstance(M, SphericalCap) else 1.0
        worst = -math.inf
        for _ in range(samples):
            f = _karcher(M, rng, 4, r)
            c = M.origin()
            for g in (f, SquaredDistance(M, _point(M, rng, r)), regularize(f, _point(M, rng, r), 0.5, 1.0)):
                mu = g.strong_convexity_on(r, c)
                x, y = _point(M, rng, r, c), _point(M, rng, r, c)
                lin = g.value(y) - g.value(x) - M.inner(x, g.gradient(x), M.log(x, y))
                worst = max(worst, 0.5 * mu * M.dist(x, y) ** 2 - lin)
        out.append(CheckReport.make(f"strong_convexity[{_kind(M)}]", 3 * samples, worst, 1e-8, "quadratic lower bound with the quoted modulus"))
    return out


def check_karcher_location(rng, samples):
    out = []
    for M in _manifolds():
        worst = -math.inf
        for _ in range(samples):
            f = _karcher(M, rng, 5)
            center = f.reference
            rad = f.spread(center)
            xs, fs = _minimizer(f)
            proj = project_ball(M, center, rad, xs)
            worst = max(worst, fs - f.value(proj), M.dist(center, xs) - rad)
        out.append(CheckReport.make(f"karcher_in_hull_ball[{_kind(M)}]", samples, worst, 1e-10, "projection onto the centers' ball does not lower the objective"))
    return out


# ---- solver checks ----------------------------------------------------------------


def _instance(M, rng):
    f = _karcher(M, rng, 6)
    xs, fs = _minimizer(f)
    x0 = _point(M, rng, _radius(M, 2.0), xs)
    return f, xs, fs, x0, M.dist(x0, xs)


def _excess(M, center, radius, points):
    return max(M.dist(center, p) for p in points) - radius


def check_iterate_bounds(rng, samples, T=200):
    out = []
    for M in _manifolds():
        worst = {k: -math.inf for k in ("rgd_1_over_L", "rgd_1_over_zeta_L", "subgradient", "rippa", "rppa")}
        for _ in range(samples):
            f, xs, fs, x0, R = _instance(M, rng)
            tr = rgd(f, x0, StepRule.inverse_l(R_bound=R, center=xs), T)
            worst["rgd_1_over_L"] = max(worst["rgd_1_over_L"], _excess(M, xs, certified_radius(RGD_INVERSE_L, M, R), tr.iterates))
            tr = rgd(f, x0, StepRule.inverse_l_zeta(R, xs), T)
            worst["rgd_1_over_zeta_L"] = max(worst["rgd_1_over_zeta_L"], _excess(M, xs, certified_radius(RGD_INVERSE_L_ZETA, M, R), tr.iterates))
            tr = subgradient_rgd(f, x0, R, T, center=xs)
            worst["subgradient"] = max(worst["subgradient"], _excess(M, xs, certified_radius(SUBGRADIENT, M, R), tr.iterates))
            rho = certified_radius(RIPPA, M, R)
            L = f.smoothness_on(rho + 2 * R, xs)
            tr = rippa(f, x0, 1.0 / f.smoothness_on(rho, xs), 30, inner=PRGD, R_bound=R, L=L)
            worst["rippa"] = max(worst["rippa"], _excess(M, xs, rho, tr.iterates))
            tr = rppa(f, x0, 1.0, 20)
            d = [M.dist(z, xs) for z in tr.iterates]
            worst["rppa"] = max(worst["rppa"], max(b - a for a, b in zip(d, d[1:])), _excess(M, xs, certified_radius(RPPA_EXACT, M, R), tr.iterates))
        for key, val in worst.items():
            out.append(CheckReport.make(f"iterate_bound_{key}[{_kind(M)}]", samples, val, 1e-8, "iterates stay in the certified ball"))
    return out


def check_monotone_descent(rng, samples, T=300):
    out = []
    for M in _manifolds():
        worst = -math.inf
        for _ in range(samples):
            f, xs, fs, x0, R = _instance(M, rng)
            for rule in (StepRule.inverse_l(R_bound=R, center=xs), StepRule.inverse_l_zeta(R, xs)):
                v = rgd(f, x0, rule, T).f_values
                worst = max(worst, max((b - a) / (1 + abs(a)) for a, b in zip(v, v[1:])))
        out.append(CheckReport.make(f"monotone_descent[{_kind(M)}]", 2 * samples, worst, 1e-14, "function values never increase below eta = 2/L"))
    return out


def check_linear_rate(rng, samples, T=200):
    out = []
    for M in _manifolds():
        worst = -math.inf
        for _ in range(samples):
            f, xs, fs, x0, R = _instance(M, rng)
            rho = certified_radius(RGD_INVERSE_L, M, R)
            L, mu = f.smoothness_on(rho, xs), f.strong_convexity_on(rho, xs)
            tr = rgd(f, x0, 1.0 / L, T, ref=xs, grad_tol=0.0)
            q = 1.0 - mu / L
            fitted = max(d / (q**t * R * R) for t, d in enumerate(tr.dist_to_ref_sq) if d > 1e-20)
            worst = max(worst, fitted - 4.0)
        out.append(CheckReport.make(f"linear_rate[{_kind(M)}]", samples, worst, 0.0, "fitted constant C - 4 for geometric decay of squared distance"))
    return out


def check_sublinear_rate(rng, samples, T=1000):
    out = []
    for M in _manifolds():
        worst = -math.inf
        for _ in range(samples):
            f, xs, fs, x0, R = _instance(M, rng)
            rule = StepRule.inverse_l_zeta(R, xs)
            eta, L = rule.resolve(f)
            z = zeta(math.sqrt(1.5) * R, M.kappa_min)
            v = rgd(f, x0, rule, T, grad_tol=0.0).f_values
            worst = max(worst, max(v[t] - fs - 3 * z * L * R * R / (4 * t) for t in range(1, len(v))))
        out.append(CheckReport.make(f"rgd_zeta_rate[{_kind(M)}]", samples, worst, 1e-12, "gap below 3 zeta L R^2 / (4T) at every T"))
    return out


def check_distance_decrease(rng, samples, T=200):
    out = []
    for M in _manifolds():
        worst, events = 0.0, 0
        for _ in range(samples):
            f, xs, fs, x0, R = _instance(M, rng)
            d = rgd(f, x0, StepRule.inverse_l(R_bound=R, center=xs), T, ref=xs).dist_to_ref_sq
            inc = [b - a for a, b in zip(d, d[1:]) if b > a]
            events += len(inc)
            worst = max([worst] + inc)
        note = f"observed only: {events} increases of squared distance"
        out.append(CheckReport.make(f"distance_decrease_observed[{_kind(M)}]", samples, worst, math.inf, note))
    return out


# ---- prox checks ------------------------------------------------------------------


def _prox_manifolds():
    return _manifolds(hyper_dim=10)


def check_quasi_nonexpansive(rng, samples):
    out = []
    for M in _prox_manifolds():
        f = _karcher(M, rng, 5)
        xs, _ = _minimizer(f)
        worst = -math.inf
        for _ in range(samples):
            xb = _point(M, rng, _radius(M, 2.0), xs)
            eta = float(rng.uniform(0.1, 3.0))
            p = prox_solve(ProxProblem(f, xb, eta))[0]
            worst = max(worst, M.dist(p, xs) - M.dist(xb, xs))
        out.append(CheckReport.make(f"quasi_nonexpansive[{_kind(M)}]", samples, worst, 1e-9, "prox never moves away from the minimizer"))
    return out


def check_nonexpansive(rng, samples):
    out = []
    for M in _prox_manifolds():
        if not M.hadamard:
            continue
        f = _karcher(M, rng, 5)
        worst = -math.inf
        for _ in range(samples):
            a, b = _point(M, rng, 2.0), _point(M, rng, 2.0)
            eta = float(rng.uniform(0.1, 3.0))
            pa, pb = (prox_solve(ProxProblem(f, z, eta))[0] for z in (a, b))
            worst = max(worst, M.dist(pa, pb) - M.dist(a, b))
        out.append(CheckReport.make(f"nonexpansive[{_kind(M)}]", samples, worst, 1e-9, "prox is 1-Lipschitz without positive curvature"))
    return out


def check_rippa_rate(rng, samples, T=50):
    out = []
    for M in _manifolds():
        ergodic, contraction = -math.inf, -math.inf
        for _ in range(samples):
            f, xs, fs, x0, R = _instance(M, rng)
            eta = float(rng.uniform(0.2, 2.0))
            tr = rippa(f, x0, eta, T, inner=EXACT)
            gaps = [f.value(z) - fs for z in tr.extras["averages"]]
            ergodic = max(ergodic, max(g - 3 * R * R / (eta * t) for t, g in enumerate(gaps, 1)))
            rho = certified_radius(RIPPA, M, R)
            mu = f.strong_convexity_on(rho, xs)
            tr = rippa(f, x0, eta, T, inner=PRGD, mu=mu, R_bound=R, L=f.smoothness_on(rho + 2 * R, xs), ref=xs)
            d = tr.dist_to_ref_sq
            bound = 1.0 / (1.0 + eta * mu / 2.0)
            ratios = [b / a - bound for a, b in zip(d, d[1:]) if b >= 1e-8]
            contraction = max([contraction] + ratios)
        out.append(CheckReport.make(f"rippa_ergodic_rate[{_kind(M)}]", samples, ergodic, 1e-8, "gap of the average below 3R^2/(eta T)"))
        out.append(CheckReport.make(f"rippa_contraction[{_kind(M)}]", samples, contraction, 1e-9, "squared distance shrinks by 1/(1 + eta mu/2) per step"))
    return out


def check_inner_cost(rng, samples, T=15):
    out = []
    for M in _manifolds():
        if not M.hadamard:
            continue
        for inner in (PRGD, CRGD):
            worst = -math.inf
            for _ in range(samples):
                f, xs, fs, x0, R = _instance(M, rng)
                rho = certified_radius(RIPPA, M, R)
                eta = 1.0 / f.smoothness_on(rho, xs)
                L = f.smoothness_on(rho + 2 * R, xs)
                budget = InexactnessBudget(eta)
                factor = zeta(R, M.kappa_min) ** 2 if inner == PRGD else 1.0 / delta(4 * R, M.kappa_max)
                try:
                    tr = rippa(f, x0, eta, T, inner=inner, R_bound=R, L=L)
                except GcvxError:
                    worst = math.inf
                    continue
                for t, calls in enumerate(tr.extras["inner_calls"]):
                    scale = factor * math.log(math.e / budget.c_t(t, L, R, M))
                    worst = max(worst, calls / scale)
            note = "fitted constant in calls <= C log(1/c_t) * " + ("zeta_R^2" if inner == PRGD else "1/delta_4R")
            out.append(CheckReport.make(f"inner_cost_{inner}[{_kind(M)}]", samples, worst, 10.0, note))
    return out


# ---- Moreau checks ----------------------------------------------------------------


def _moreau_setup(M, rng):
    f = _karcher(M, rng, 5)
    ball = (M.origin(), 0.4 if isinstance(M, SphericalCap) else 1.0)
    return f, ball


def check_moreau_gradient(rng, samples):
    out = []
    for M in _manifolds():
        f, ball = _moreau_setup(M, rng)
        worst = 0.0
        for _ in range(samples):
            x = _point(M, rng, _radius(M, 2.0))
            eta = float(rng.uniform(0.2, 2.0))
            _, g, _ = moreau(f, ball, x, eta)
            fd = fd_gradient(lambda z: moreau_value(f, ball, z, eta), x, 1e-4, manifold=M)
            worst = max(worst, M.norm(x, fd - g) / (1 + M.norm(x, g)))
        out.append(CheckReport.make(f"moreau_gradient[{_kind(M)}]", samples, worst, 1e-4, "envelope gradient points to the prox"))
    return out


def check_moreau_smoothness(rng, samples):
    out = []
    for M in _manifolds():
        f, ball = _moreau_setup(M, rng)
        worst = -math.inf
        r = _radius(M, 2.0)
        for _ in range(samples):
            x, y = _point(M, rng, r), _point(M, rng, r)
            eta = float(rng.uniform(0.2, 2.0))
            mx, gx, p = moreau(f, ball, x, eta)
            my = moreau_value(f, ball, y, eta)
            z = zeta(M.dist(x, p), M.kappa_min)
            upper = mx + M.inner(x, gx, M.log(x, y)) + z / (2 * eta) * M.dist(x, y) ** 2
            worst = max(worst, my - upper)
        out.append(CheckReport.make(f"moreau_smoothness[{_kind(M)}]", samples, worst, 1e-8, "quadratic upper bound with zeta at d(x, prox x)"))
    return out


# ---- min-max checks ---------------------------------------------------------------


def _saddle(M, rng, coupling):
    r = 1.5
    a, b = _point(M, rng, r), _point(M, rng, r)
    z0 = (_point(M, rng, r), _point(M, rng, r))
    f = SaddleToy(M, M, a, b, coupling)
    return f, z0, f.manifold.dist(z0, (a, b))


def check_minmax(rng, samples, T=200):
    out = []
    for M, c in ((Hyperbolic(2), 0.0), (Euclidean(2), 0.5)):
        fitted, field_inc, last_gap = -math.inf, -math.inf, -math.inf
        for _ in range(samples):
            f, z0, R = _saddle(M, rng, c)
            P = f.manifold
            rho = certified_radius(RIPPA, P, R)
            L = f.smoothness_on(2 * rho, (f.a, f.b))
            eta = 1.0 / L
            tr = rippa(f, z0, eta, T, inner=RGDA, R_bound=R, L=L)
            gaps = [f.duality_gap(z) for z in tr.extras["averages"]]
            fitted = max(fitted, max(t * g for t, g in enumerate(gaps, 1)) / (3 * R * R / eta))
            for norms in tr.extras["inner_field_norms"]:
                field_inc = max([field_inc] + [b - a for a, b in zip(norms, norms[1:])])
            mu = f.strong_convexity_on(rho, (f.a, f.b))
            tr = rippa(f, z0, eta, 1000, inner=RGDA, mu=mu, R_bound=R, L=L, f_star=0.0, tol=1e-6)
            last_gap = max(last_gap, tr.extras["gap"][-1])
        tag = f"{M.kind}{M.dim}_c{c:g}"
        out.append(CheckReport.make(f"minmax_average_rate[{tag}]", samples, fitted, 1.0, "T * gap of the average, relative to 3R^2/eta"))
        out.append(CheckReport.make(f"minmax_inner_field[{tag}]", samples, field_inc, 1e-12, "descent-ascent field norm never increases"))
        out.append(CheckReport.make(f"minmax_convergence[{tag}]", samples, last_gap, 1e-6, "duality gap after at most 1000 outer steps"))
    return out


# ---- registry ---------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    suite: str
    claim: str
    run: object
    samples: int


# property identifiers; the first group must each have exactly one producer
PROPERTIES = {
    "geometry.zeta_monotone": "zeta nondecreasing and delta nonincreasing in r",
    "geometry.zeta_bracket": "r sqrt|k| <= zeta <= r sqrt|k| + 1",
    "geometry.cosine_slacks": "cosine-law slacks nonnegative",
    "geometry.average_convexity": "objective at geodesic average below mean",
    "geometry.hessian_sandwich": "second difference of half squared distance in [delta_D, zeta_D]",
    "objectives.gradient_fd": "gradients agree with finite differences",
    "objectives.midpoint_convexity": "midpoint convexity on Hadamard manifolds",
    "objectives.strong_convexity": "strong convexity certificate",
    "objectives.karcher_location": "Karcher minimizer inside the centers' ball",
    "solvers.iterate_bounds": "iterates inside certified balls",
    "solvers.monotone_descent": "RGD values nonincreasing for eta < 2/L",
    "solvers.linear_rate": "geometric decay with fitted constant at most 4",
    "solvers.distance_observation": "distance to the minimizer flagged when it increases",
    "proximal.quasi_nonexpansive": "prox does not move away from minimizers",
    "proximal.nonexpansive": "prox nonexpansive on Hadamard manifolds",
    "proximal.moreau_smoothness": "Moreau envelope quadratic upper bound",
    "proximal.rippa_rate": "RIPPA ergodic rate and strongly convex contraction",
    "proximal.inner_cost": "inner calls per outer step bounded by a fitted constant",
    "proximal.minmax": "RIPPA-RGDA rate and monotone inner field norm",
}
EXTRA_PROPERTIES = {
    "manifolds.roundtrip": "exp/log roundtrip",
    "manifolds.transport": "transport isometry",
    "manifolds.contraction": "log maps contract on Hadamard manifolds",
    "manifolds.product": "product distance composition",
    "geometry.bound_c": "product identity for the inexactness schedule",
    "solvers.sublinear_rate": "RGD with eta = 1/(zeta L) sublinear rate",
    "proximal.moreau_gradient": "Moreau gradient against finite differences",
}

REGISTRY = [
    Check("roundtrip", "geometry", "manifolds.roundtrip", check_roundtrip, 200),
    Check("transport_isometry", "geometry", "manifolds.transport", check_transport, 200),
    Check("log_contraction", "geometry", "manifolds.contraction", check_hadamard_contraction, 200),
    Check("product_distance", "geometry", "manifolds.product", check_product_distance, 200),
    Check("distortion_monotone", "geometry", "geometry.zeta_monotone", check_zeta_monotone, 2000),
    Check("zeta_bracket", "geometry", "geometry.zeta_bracket", check_zeta_bracket, 2000),
    Check("cosine_slacks", "geometry", "geometry.cosine_slacks", check_cosine, 2000),
    Check("average_convexity", "geometry", "geometry.average_convexity", check_average_convexity, 100),
    Check("hessian_sandwich", "geometry", "geometry.hessian_sandwich", check_hessian_sandwich, 500),
    Check("bound_c_identity", "geometry", "geometry.bound_c", check_bound_c, 1),
    Check("gradient_fd", "solvers", "objectives.gradient_fd", check_gradients, 20),
    Check("midpoint_convexity", "solvers", "objectives.midpoint_convexity", check_midpoint_convexity, 100),
    Check("strong_convexity", "solvers", "objectives.strong_convexity", check_strong_convexity, 100),
    Check("karcher_in_hull_ball", "solvers", "objectives.karcher_location", check_karcher_location, 10),
    Check("iterate_bounds", "solvers", "solvers.iterate_bounds", check_iterate_bounds, 5),
    Check("monotone_descent", "solvers", "solvers.monotone_descent", check_monotone_descent, 5),
    Check("linear_rate", "solvers", "solvers.linear_rate", check_linear_rate, 5),
    Check("rgd_zeta_rate", "solvers", "solvers.sublinear_rate", check_sublinear_rate, 3),
    Check("distance_decrease_observed", "solvers", "solvers.distance_observation", check_distance_decrease, 5),
    Check("quasi_nonexpansive", "prox", "proximal.quasi_nonexpansive", check_quasi_nonexpansive, 100),
    Check("nonexpansive", "prox", "proximal.nonexpansive", check_nonexpansive, 100),
    Check("rippa_rate", "prox", "proximal.rippa_rate", check_rippa_rate, 3),
    Check("inner_cost", "prox", "proximal.inner_cost", check_inner_cost, 3),
    Check("moreau_gradient", "moreau", "proximal.moreau_gradient", check_moreau_gradient, 10),
    Check("moreau_smoothness", "moreau", "proximal.moreau_smoothness", check_moreau_smoothness, 100),
    Check("minmax", "minmax", "proximal.minmax", check_minmax, 3),
]
SUITES = ("geometry", "prox", "solvers", "moreau", "minmax")


def run_check(check, seed=0, samples=None):
    if isinstance(check, str):
        check = next(c for c in REGISTRY if c.name == check)
    n = check.samples if samples is None else int(samples)
    rng = _rng(seed, check.name)
    try:
        return check.run(rng, n)
    except (GcvxError, ArithmeticError, np.linalg.LinAlgError) as err:
        return [CheckReport.make(check.name, n, math.inf, 0.0, f"raised {type(err).__name__}: {err}")]


def run_suite(suite, seed=0, samples=None, tolerance=None):
    """Run every check of a suite. Deterministic for a given seed."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    reports = []
    for check in REGISTRY:
        if check.suite == suite:
            reports.extend(run_check(check, seed, samples))
    if tolerance is not None:
        reports = [r.with_tolerance(tolerance) for r in reports]
    return reports


def write_reports(reports, out=None):
    """One JSON object per line, to ``out`` or stdout."""
    lines = "".join(json.dumps(asdict(r)) + "\n" for r in reports)
    if out is None:
        sys.stdout.write(lines)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(lines)
