"""Proximal operator, Moreau envelope and the inexact proximal point loop."""
import math
from dataclasses import dataclass, field

from .errors import Diverged, InnerBudgetExceeded, NonFinite, RenormalizationDrift, StepRuleUnresolvable
from .geometry import GeodesicAverager, delta, project_ball, zeta
from .objectives import ProximalObjective, ProximalSaddle
from .solvers import BLOWUP, Composite, SolverTrace, crgd_step

EXACT, CRGD, PRGD, RGDA = "exact", "crgd", "prgd", "rgda"
EXACT_TOL = 1e-12
MAX_INNER_CAP = 100_000
RESIDUAL_FLOOR = 1e-14


@dataclass(eq=False)
class ProxProblem:
    objective: object
    anchor: object
    eta: float

    @property
    def saddle(self):
        return hasattr(self.objective, "field")

    def subproblem(self):
        cls = ProximalSaddle if self.saddle else ProximalObjective
        return cls(self.objective, self.anchor, self.eta)


@dataclass
class InexactnessBudget:
    """Inexactness schedule: (t+1)^-2 when mu = 0, eta*mu/2 when mu > 0."""

    eta: float
    mu: float = 0.0

    @property
    def mode(self):
        return "mu_positive" if self.mu > 0 else "mu_zero"

    def delta_t(self, t):
        return self.eta * self.mu / 2.0 if self.mu > 0 else (t + 1.0) ** -2

    def c_t(self, t, L, R, manifold):
        """Relative tolerance on the distance to the exact prox, smooth case."""
        d = self.delta_t(t + 1)
        dl = delta(3 * R, manifold.kappa_max)
        z = zeta(3 * R, manifold.kappa_min)
        return min(0.25, d * dl / (2 * (self.eta * L + z) ** 2 + 2 * d * dl))


@dataclass
class ProxResidual:
    r: object
    v: object
    norm_sq: float


@dataclass
class InnerReport:
    calls: int = 0
    steps: int = 0
    target: float = None
    field_norms: list = field(default_factory=list)
    satisfied: bool = True


def _direction(h, z):
    """Gradient of the subproblem (or its descent-ascent field) at z."""
    if isinstance(h, ProximalSaddle):
        return h.field(z)
    return h.value_and_gradient(z)[1]


def residual(problem, z, direction=None):
    """r = eta * grad h(z) = eta * v - log_z(anchor) with v the gradient of f at z."""
    M = problem.objective.manifold
    if direction is None:
        direction = _direction(problem.subproblem(), z)
    r = problem.eta * direction
    v = (r + M.log(z, problem.anchor)) / problem.eta
    return ProxResidual(r, v, M.inner(z, r, r))


def _safe_exp(M, z, v):
    try:
        return M.exp(z, v)
    except (NonFinite, RenormalizationDrift) as err:
        raise Diverged(f"inner iterate left the representable range: {err}") from err


def _deep_descent(h, start, eta, ball=None, tol=EXACT_TOL, max_iter=MAX_INNER_CAP):
    """Gradient descent on a prox subproblem until eta * ||gradient map|| <= tol."""
    M = h.manifold
    z = start if ball is None else project_ball(M, ball[0], ball[1], start)
    val, g = h.value_and_gradient(z)
    gn = M.norm(z, g)
    if ball is None:
        lo = max(delta(min(2 * eta * gn, M.max_radius), M.kappa_max), 0.1)
        rho = 2 * eta * gn / lo + M.dist(z, h.anchor)
    else:
        rho = ball[1] + M.dist(ball[0], h.anchor)
    s = 1.0 / h.smoothness_on(rho, h.anchor)
    for k in range(1, max_iter + 1):
        while True:
            zn = _safe_exp(M, z, -s * g)
            if ball is not None:
                zn = project_ball(M, ball[0], ball[1], zn)
            vn, gnew = h.value_and_gradient(zn)
            # slack at the value noise floor so roundoff does not shrink a certified step
            if vn <= val + 1e-12 * max(1.0, abs(val)) or s < 1e-16:
                break
            s *= 0.5
        # gradient mapping; equals the gradient norm when the ball is inactive
        mapping = M.norm(zn, gnew) if ball is None else M.norm(z, M.log(z, zn)) / s
        z, val, g = zn, vn, gnew
        if eta * mapping <= tol:
            return z, k
    raise InnerBudgetExceeded(f"deep prox solve did not reach {tol:g} in {max_iter} steps", inner_calls=max_iter)


def _exact(problem, tol):
    f = problem.objective
    closed = f.prox(problem.anchor, problem.eta)
    if closed is not None:
        return closed, 0
    h = problem.subproblem()
    if problem.saddle:
        raise StepRuleUnresolvable("exact saddle prox needs a closed form")
    z, k = _deep_descent(h, problem.anchor, problem.eta, tol=tol)
    return z, k + 1


def _distance_surrogate(M, z, anchor, r_norm, dl, c_t):
    # strong convexity of h bounds d(z, exact prox) by ||r|| / delta
    e = r_norm / max(dl, 1e-12)
    gap = M.dist(z, anchor) - e
    return gap > 0 and e * e <= c_t * gap * gap


def prox_solve(
    problem,
    inner=EXACT,
    budget=None,
    t=0,
    R_bound=None,
    L=None,
    inner_iters=None,
    max_inner=None,
    tol=EXACT_TOL,
):
    """Approximate prox of ``problem`` started from its anchor.

    ``inner_iters`` fixes the number of inner steps (residual is reported but
    not enforced). Otherwise the inner solver runs until
    ||r||^2 <= Delta_{t+1} * delta_{5R} * d(z, anchor)^2.
    Returns (z_next, ProxResidual, InnerReport).
    """
    M = problem.objective.manifold
    eta, anchor = problem.eta, problem.anchor
    if inner == EXACT:
        z, calls = _exact(problem, tol)
        return z, residual(problem, z), InnerReport(calls=calls, steps=calls)
    if R_bound is None or L is None:
        raise StepRuleUnresolvable("inexact prox needs R_bound and L")
    if inner == RGDA and not problem.saddle:
        raise ValueError("descent-ascent inner solver needs a saddle objective")
    if inner in (CRGD, PRGD) and problem.saddle:
        raise ValueError("saddle objectives use the descent-ascent inner solver")

    h = problem.subproblem()
    budget = budget or InexactnessBudget(eta)
    target = budget.delta_t(t + 1) * delta(5 * R_bound, M.kappa_max)
    positive = M.kappa_max > 0
    c_t = budget.c_t(t, L, R_bound, M)
    dl = delta(3 * R_bound, M.kappa_max)
    if inner_iters is None and max_inner is None:
        z_r = zeta(R_bound, M.kappa_min)
        max_inner = min(MAX_INNER_CAP, int(10 * math.ceil(z_r**2) * math.log(1.0 / c_t)) + 1)
    limit = inner_iters if inner_iters is not None else max_inner

    ball = (anchor, 2.0 * R_bound)
    L_h = L + zeta(2.0 * R_bound, M.kappa_min) / eta
    comp = Composite.squared_distance(anchor, 1.0 / eta, ball)
    report = InnerReport(target=target)

    z = anchor
    d = _direction(h, z)
    report.calls = 1
    if inner == RGDA:
        report.field_norms.append(M.norm(z, d))
    for k in range(1, limit + 1):
        if inner == RGDA:
            z = _safe_exp(M, z, -(1.0 / L_h) * d)
        elif inner == PRGD and k > 1:
            z = project_ball(M, anchor, ball[1], _safe_exp(M, z, -(1.0 / L_h) * d))
        else:
            # composite step on f with the prox term kept exact; closed form at the anchor
            grad_f = d + M.log(z, anchor) / eta
            z, _ = crgd_step(M, z, grad_f, L, comp)
        d = _direction(h, z)
        report.calls += 1
        report.steps = k
        if inner == RGDA:
            report.field_norms.append(M.norm(z, d))
        res = residual(problem, z, d)
        if inner_iters is not None:
            continue
        rn = math.sqrt(res.norm_sq)
        ok = res.norm_sq <= target * M.dist(z, anchor) ** 2 or rn <= RESIDUAL_FLOOR
        if ok and positive and rn > RESIDUAL_FLOOR:
            ok = _distance_surrogate(M, z, anchor, rn, dl, c_t)
        if ok:
            return z, res, report
    res = residual(problem, z, d)
    if inner_iters is None:
        raise InnerBudgetExceeded(
            f"inner criterion unmet after {limit} steps at outer step {t}",
            outer_step=t,
            inner_calls=report.calls,
            residual_sq=res.norm_sq,
            target=target * M.dist(z, anchor) ** 2,
        )
    return z, res, report


def _loop(f, z0, eta, T, inner, mu, R_bound, ref, L, inner_iters, max_inner, f_star, tol, keep_every, average):
    M = f.manifold
    saddle = hasattr(f, "field")
    if inner != EXACT and L is None:
        if R_bound is None:
            raise StepRuleUnresolvable("inexact inner solvers need R_bound")
        L = f.smoothness_on(5.0 * R_bound, z0)
    budget = InexactnessBudget(eta, mu)
    trace = SolverTrace(eta=eta, keep_every=keep_every)
    ex = trace.extras
    for key in ("inner_calls", "residual_sq", "inner_field_norms", "averages"):
        ex[key] = []
    ex["gap"] = [] if saddle else None
    ex["L"] = L

    def measure(z):
        if saddle:
            return f.value(z), f.field(z)
        return f.value_and_gradient(z)

    val, g = measure(z0)
    f0 = val
    calls = 1
    avg = GeodesicAverager(M)

    def push(z, val, g):
        if not math.isfinite(val) or (not saddle and val > max(abs(f0), 1.0) * BLOWUP):
            raise Diverged("objective blew up in the proximal loop", trace)
        trace.push(M, z, val, M.norm(z, g), calls, ref)
        if saddle:
            ex["gap"].append(f.duality_gap(z))

    push(z0, val, g)
    z = z0
    for t in range(T):
        # saddle runs report the gap of their output, so stop on that
        progress = ex["gap"][-1] if saddle else val
        if saddle and average and avg.value is not None:
            progress = f.duality_gap(avg.value)
        if f_star is not None and tol is not None and progress - (0.0 if saddle else f_star) <= tol:
            trace.stop_reason = "tolerance"
            break
        if M.norm(z, g) <= 1e-14 and not (saddle and average):
            trace.converged, trace.stop_reason = True, "converged"
            break
        problem = ProxProblem(f, z, eta)
        try:
            z, res, rep = prox_solve(problem, inner, budget, t, R_bound, L, inner_iters, max_inner)
        except InnerBudgetExceeded as err:
            err.trace = trace
            raise
        except Diverged as err:
            err.trace = trace
            raise
        calls += rep.calls
        ex["inner_calls"].append(rep.calls)
        ex["residual_sq"].append(res.norm_sq)
        if rep.field_norms:
            ex["inner_field_norms"].append(rep.field_norms)
        val = f.value(z)
        g = res.v
        push(z, val, g)
        if average:
            ex["averages"].append(avg.add(z))
    if average and avg.value is not None:
        trace.averaged_output = avg.value
    return trace


def rippa(
    f,
    z0,
    eta,
    T,
    inner=PRGD,
    mu=0.0,
    R_bound=None,
    ref=None,
    L=None,
    inner_iters=None,
    max_inner=None,
    f_star=None,
    tol=None,
    keep_every=1,
):
    """Inexact proximal point method.

    With mu > 0 the output is the last iterate; with mu = 0 it is the uniform
    geodesic average of z_1..z_T (``averaged_output``; prefix averages are kept
    in ``extras['averages']``). Saddle objectives are averaged factor-wise.
    """
    return _loop(f, z0, eta, T, inner, mu, R_bound, ref, L, inner_iters, max_inner, f_star, tol, keep_every, mu == 0)


def rppa(f, z0, eta, T, ref=None, f_star=None, tol=None, keep_every=1):
    """Exact proximal point method z <- prox_{eta f}(z)."""
    return _loop(f, z0, eta, T, EXACT, 0.0, None, ref, None, None, None, f_star, tol, keep_every, False)


# ---- Moreau envelope -------------------------------------------------------------


def constrained_prox(f, ball, x, eta, tol=EXACT_TOL):
    """argmin over the ball of f(z) + d(z, x)^2 / (2 eta); ``ball`` may be None."""
    M = f.manifold
    closed = f.prox(x, eta)
    if closed is not None and (ball is None or M.dist(ball[0], closed) <= ball[1]):
        return closed
    h = ProximalObjective(f, x, eta)
    z, _ = _deep_descent(h, x, eta, ball=ball, tol=tol)
    return z


def moreau(f, ball, x, eta, tol=EXACT_TOL):
    """Return (M(x), grad M(x), prox point)."""
    M = f.manifold
    p = constrained_prox(f, ball, x, eta, tol)
    value = f.value(p) + M.dist(x, p) ** 2 / (2 * eta)
    return value, -M.log(x, p) / eta, p


def moreau_value(f, ball, x, eta):
    return moreau(f, ball, x, eta)[0]


def moreau_grad(f, ball, x, eta):
    return moreau(f, ball, x, eta)[1]

