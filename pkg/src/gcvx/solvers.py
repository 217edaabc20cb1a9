"""First-order methods: RGD, subgradient RGD, projected RGD, composite RGD
and simultaneous gradient descent-ascent."""
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import Diverged, NonFinite, RenormalizationDrift, StepRuleUnresolvable, UnsupportedComposite
from .geometry import PHI, GeodesicAverager, project_ball, zeta
from .manifolds import Hyperbolic

GRAD_FLOOR = 1e-14
BLOWUP = 1e6


@dataclass
class SolverTrace:
    iterates: list = field(default_factory=list)
    f_values: list = field(default_factory=list)
    dist_to_ref_sq: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    oracle_calls: list = field(default_factory=list)
    averaged_output: object = None
    last: object = None
    eta: float = None
    converged: bool = False
    stop_reason: str = "max_iters"
    violations: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    keep_every: int = 1
    wall_ns: list = field(default_factory=list)
    started: int = field(default_factory=time.perf_counter_ns)

    def push(self, manifold, x, fval, gnorm, calls, ref=None):
        k = len(self.f_values)
        if self.keep_every and k % self.keep_every == 0:
            self.iterates.append(x)
        self.last = x
        self.f_values.append(float(fval))
        self.grad_norms.append(float(gnorm))
        self.oracle_calls.append(int(calls))
        self.wall_ns.append(time.perf_counter_ns() - self.started)
        if ref is not None:
            self.dist_to_ref_sq.append(manifold.dist(x, ref) ** 2)

    @property
    def steps(self):
        return len(self.f_values) - 1

    @property
    def output(self):
        return self.last if self.averaged_output is None else self.averaged_output

    def r_max(self, manifold, center):
        return max(manifold.dist(x, center) for x in self.iterates)


def _step(manifold, x, v, trace):
    try:
        return manifold.exp(x, v)
    except (NonFinite, RenormalizationDrift) as err:
        raise Diverged(f"iterate left the representable range: {err}", trace) from err


def _guard(fval, f0, trace):
    if not math.isfinite(fval):
        raise Diverged("objective became non-finite", trace)
    if fval > max(abs(f0), 1.0) * BLOWUP:
        raise Diverged(f"objective {fval:.3e} exceeds the divergence threshold", trace)


# ---- step rules and certificates ------------------------------------------------

RGD_INVERSE_L = "rgd_inverse_l"
RGD_INVERSE_L_ZETA = "rgd_inverse_l_zeta"
SUBGRADIENT = "subgradient"
RIPPA = "rippa"
RPPA_EXACT = "rppa_exact"


def certified_radius(source, manifold, R):
    """Radius of the ball around the optimizer that the iterates provably stay in."""
    if source == RGD_INVERSE_L:
        if isinstance(manifold, Hyperbolic):
            return PHI * R
        return PHI * R * zeta(R, manifold.kappa_min)
    if source == RGD_INVERSE_L_ZETA:
        return math.sqrt(1.5) * R
    if source in (SUBGRADIENT, RIPPA):
        return math.sqrt(2.0) * R
    if source == RPPA_EXACT:
        return R
    raise ValueError(f"unknown certificate source {source!r}")


@dataclass
class IterateBoundCertificate:
    center: object
    radius: float
    source: str

    @classmethod
    def for_solver(cls, source, manifold, center, R):
        return cls(center, certified_radius(source, manifold, R), source)

    def worst_excess(self, manifold, points):
        """Largest amount by which a point sits outside the certified ball."""
        return max(manifold.dist(self.center, p) - self.radius for p in points)


@dataclass(eq=False)
class StepRule:
    kind: str
    eta: float = None
    R_bound: float = None
    horizon: int = None
    radius: float = None
    center: object = None

    @classmethod
    def fixed(cls, eta):
        return cls("fixed", eta=float(eta))

    @classmethod
    def inverse_l(cls, radius=None, R_bound=None, center=None):
        return cls("inverse_l", radius=radius, R_bound=R_bound, center=center)

    @classmethod
    def inverse_l_zeta(cls, R_bound, center=None):
        return cls("inverse_l_zeta", R_bound=R_bound, center=center)

    @classmethod
    def subgradient(cls, R_bound, horizon, center=None):
        return cls("subgradient", R_bound=R_bound, horizon=horizon, center=center)

    def resolve(self, f):
        """Return (eta, L); L is None when the rule does not involve smoothness."""
        M = f.manifold
        if self.kind == "fixed":
            return self.eta, None
        if self.kind == "inverse_l":
            radius = self.radius
            if radius is None:
                if self.R_bound is None:
                    raise StepRuleUnresolvable("InverseL needs a radius or R_bound")
                radius = certified_radius(RGD_INVERSE_L, M, self.R_bound)
            L = f.smoothness_on(radius, self.center)
            return 1.0 / L, L
        if self.kind == "inverse_l_zeta":
            if self.R_bound is None:
                raise StepRuleUnresolvable("InverseLZeta needs R_bound")
            rho = math.sqrt(1.5) * self.R_bound
            L = f.smoothness_on(rho, self.center)
            return 1.0 / (zeta(rho, M.kappa_min) * L), L
        if self.kind == "subgradient":
            if self.R_bound is None or not self.horizon:
                raise StepRuleUnresolvable("Subgradient needs R_bound and a horizon")
            rho = math.sqrt(2.0) * self.R_bound
            lip = f.lipschitz_on(rho, self.center)
            if lip == 0:
                return 0.0, None
            return self.R_bound / (lip * math.sqrt(zeta(rho, M.kappa_min) * self.horizon)), None
        raise StepRuleUnresolvable(f"unknown step rule {self.kind!r}")


def _reached(fval, f_star, tol):
    return f_star is not None and tol is not None and fval - f_star <= tol


# ---- plain and projected gradient descent ---------------------------------------


def _descent(f, x0, eta, T, ref, f_star, tol, keep_every, project=None, L=None, grad_tol=GRAD_FLOOR):
    M = f.manifold
    trace = SolverTrace(eta=eta, keep_every=keep_every)
    x = x0
    val, g = f.value_and_gradient(x)
    calls = 1
    f0 = val
    _guard(val, f0, trace)
    gn = M.norm(x, g)
    trace.push(M, x, val, gn, calls, ref)
    for t in range(T):
        if gn <= grad_tol:
            trace.converged, trace.stop_reason = True, "converged"
            break
        if _reached(val, f_star, tol):
            trace.stop_reason = "tolerance"
            break
        x = _step(M, x, -eta * g, trace)
        if project is not None:
            x = project(x)
        new, g = f.value_and_gradient(x)
        calls += 1
        _guard(new, f0, trace)
        if L is not None and eta * L < 2 and new > val + 1e-12 * max(1.0, abs(val)):
            trace.violations.append(f"step {t + 1}: f increased by {new - val:.3e} with eta*L = {eta * L:.3g}")
        val = new
        gn = M.norm(x, g)
        trace.push(M, x, val, gn, calls, ref)
    else:
        if _reached(val, f_star, tol):
            trace.stop_reason = "tolerance"
    return trace


def rgd(f, x0, rule, T, ref=None, f_star=None, tol=None, keep_every=1, grad_tol=GRAD_FLOOR):
    """Riemannian gradient descent x <- Exp_x(-eta grad f(x)).

    Stops early when ||grad|| <= grad_tol (``converged``) or, given
    ``f_star`` and ``tol``, once f(x) - f_star <= tol.
    """
    if isinstance(rule, (int, float)):
        rule = StepRule.fixed(rule)
    eta, L = rule.resolve(f)
    return _descent(f, x0, eta, T, ref, f_star, tol, keep_every, L=L, grad_tol=grad_tol)


def prgd(f, x0, ball, eta, T, ref=None, f_star=None, tol=None, keep_every=1):
    """Gradient step followed by metric projection onto ``ball = (center, radius)``."""
    M = f.manifold
    center, radius = ball
    if M.dist(center, x0) > radius * (1 + 1e-12) + 1e-12:
        raise ValueError("x0 must lie in the ball")
    proj = lambda x: project_ball(M, center, radius, x)
    return _descent(f, x0, eta, T, ref, f_star, tol, keep_every, project=proj)


def subgradient_rgd(f, x0, R_bound, T, ref=None, center=None, keep_every=1):
    """Fixed-step subgradient method; ``averaged_output`` is the uniform
    geodesic average of x_0 .. x_{T-1}."""
    M = f.manifold
    eta, _ = StepRule.subgradient(R_bound, T, center).resolve(f)
    trace = SolverTrace(eta=eta, keep_every=keep_every)
    avg = GeodesicAverager(M)
    x = x0
    val, g = f.value_and_gradient(x)
    f0 = val
    trace.push(M, x, val, M.norm(x, g), 1, ref)
    for t in range(T):
        avg.add(x)
        x = _step(M, x, -eta * g, trace)
        val, g = f.value_and_gradient(x)
        _guard(val, f0, trace)
        trace.push(M, x, val, M.norm(x, g), t + 2, ref)
    trace.averaged_output = avg.value
    return trace


# ---- composite RGD ---------------------------------------------------------------


@dataclass(eq=False)
class Composite:
    """Composite term g = (weight/2) d(anchor, .)^2 plus an optional ball indicator."""

    weight: float = 0.0
    anchor: object = None
    ball: tuple = None

    def __post_init__(self):
        if self.weight < 0 or (self.weight > 0 and self.anchor is None):
            raise UnsupportedComposite("squared-distance term needs a positive weight and an anchor")
        if self.weight == 0 and self.ball is None:
            raise UnsupportedComposite("empty composite term")

    @classmethod
    def squared_distance(cls, anchor, weight, ball=None):
        return cls(float(weight), anchor, ball)

    @classmethod
    def ball_indicator(cls, center, radius):
        return cls(0.0, None, (center, float(radius)))

    def value(self, manifold, y):
        if self.ball is not None and manifold.dist(self.ball[0], y) > self.ball[1] * (1 + 1e-10) + 1e-12:
            return math.inf
        if self.weight == 0:
            return 0.0
        return 0.5 * self.weight * manifold.dist(self.anchor, y) ** 2


def _same_point(x, y):
    if isinstance(x, tuple):
        return all(_same_point(a, b) for a, b in zip(x, y))
    return x is y or np.array_equal(x, y)


def _clip(manifold, x, v, radius):
    n = manifold.norm(x, v)
    return v if n <= radius else v * (radius / n)


def crgd_step(manifold, x, grad, L, g, tol=1e-10, max_iter=10000):
    """Minimize <grad, log_x y> + (L/2) d(x, y)^2 + g(y) over y.

    Closed forms are used when the composite term is centered at x or the ball
    constraint is inactive. Otherwise the problem is solved over the tangent
    space at x by projected gradient steps until the step residual drops
    below ``tol``. Returns the minimizer and the number of inner steps.
    """
    M = manifold
    lam, ball = g.weight, g.ball
    v = -grad / (L + lam)
    if lam == 0 or _same_point(g.anchor, x):
        if ball is not None and _same_point(ball[0], x):
            return M.exp(x, _clip(M, x, v, ball[1])), 0
        y = M.exp(x, v)
        if ball is None or M.dist(ball[0], y) <= ball[1]:
            return y, 0
    return _tangent_subproblem(M, x, grad, L, g, v, tol, max_iter)


def _tangent_subproblem(M, x, grad, L, g, v, tol, max_iter):
    lam, ball = g.weight, g.ball

    def feasible(v):
        if ball is None:
            return v, M.exp(x, v)
        y = M.exp(x, v)
        if M.dist(ball[0], y) > ball[1]:
            y = project_ball(M, ball[0], ball[1], y)
            v = M.log(x, y)
        return v, y

    def objective(v, y):
        out = M.inner(x, grad, v) + 0.5 * L * M.inner(x, v, v)
        if lam:
            out += 0.5 * lam * M.dist(g.anchor, y) ** 2
        return out

    def gradient(v, y):
        out = grad + L * v
        if lam:
            out = out - lam * M.dexp_adjoint(x, v, M.log(y, g.anchor))
        return out

    v, y = feasible(v)
    reach = M.norm(x, v) + (M.dist(x, g.anchor) if lam else 0.0)
    s = 1.0 / (L + lam * zeta(2.0 * reach + 1.0, M.kappa_min))
    phi = objective(v, y)
    for k in range(1, max_iter + 1):
        G = gradient(v, y)
        while True:
            v_new, y_new = feasible(v - s * G)
            phi_new = objective(v_new, y_new)
            if phi_new <= phi + 1e-12 * max(1.0, abs(phi)) or s < 1e-14:
                break
            s *= 0.5
        res = M.norm(x, v_new - v) / s
        v, y, phi = v_new, y_new, phi_new
        if res <= tol:
            return y, k
    return y, max_iter


def crgd(f, g, x0, T, L=None, ref=None, f_star=None, tol=None, keep_every=1):
    """Composite RGD for F = f + g with g a :class:`Composite` term."""
    if not isinstance(g, Composite):
        raise UnsupportedComposite(f"unsupported composite term {type(g).__name__}")
    M = f.manifold
    if L is None:
        if g.ball is None:
            raise StepRuleUnresolvable("crgd needs L when no ball bounds the iterates")
        L = f.smoothness_on(g.ball[1], g.ball[0])
    trace = SolverTrace(eta=1.0 / L, keep_every=keep_every)
    trace.extras["inner_steps"] = []
    x = x0
    val, grad = f.value_and_gradient(x)
    F = val + g.value(M, x)
    F0 = F
    trace.push(M, x, F, M.norm(x, grad), 1, ref)
    for t in range(T):
        if M.norm(x, grad) <= GRAD_FLOOR and g.value(M, x) == 0.0:
            trace.converged, trace.stop_reason = True, "converged"
            break
        if _reached(F, f_star, tol):
            trace.stop_reason = "tolerance"
            break
        try:
            x, inner = crgd_step(M, x, grad, L, g)
        except (NonFinite, RenormalizationDrift) as err:
            raise Diverged(str(err), trace) from err
        trace.extras["inner_steps"].append(inner)
        val, grad = f.value_and_gradient(x)
        F = val + g.value(M, x)
        _guard(F, F0, trace)
        trace.push(M, x, F, M.norm(x, grad), t + 2, ref)
    return trace


# ---- descent-ascent --------------------------------------------------------------


def rgda(f, z0, eta, T, ref=None, keep_every=1):
    """Simultaneous descent in x and ascent in y: z <- Exp_z(-eta F(z)) with
    F = (d_x f, -d_y f). ``extras['field_norm_sq']`` tracks ||F(z_t)||^2."""
    M = f.manifold
    trace = SolverTrace(eta=eta, keep_every=keep_every)
    sq = trace.extras["field_norm_sq"] = []
    gaps = trace.extras["gap"] = [] if hasattr(f, "duality_gap") else None
    z = z0
    F = f.field(z)
    n0 = M.norm(z, F)

    def push(z, F, calls):
        n = M.norm(z, F)
        if not math.isfinite(n) or n > max(n0, 1.0) * BLOWUP:
            raise Diverged("field norm blew up", trace)
        sq.append(n * n)
        if gaps is not None:
            gaps.append(f.duality_gap(z))
        trace.push(M, z, f.value(z), n, calls, ref)
        return n

    n = push(z, F, 1)
    for t in range(T):
        if n <= GRAD_FLOOR:
            trace.converged, trace.stop_reason = True, "converged"
            break
        z = _step(M, z, -eta * F, trace)
        F = f.field(z)
        n = push(z, F, t + 2)
    return trace
