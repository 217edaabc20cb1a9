"""Experiment generation, reference optimizers, solver dispatch and trace files.

All randomness flows from one ``numpy.random.Philox`` stream keyed by the
config seed, so a config fully determines its output.
"""
import json
import logging
import math
import platform
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .errors import ConfigInvalid
from .geometry import PHI, delta, project_ball, zeta
from .manifolds import Product, build, uniform_tangent_ball
from .objectives import Karcher, SaddleToy, regularize
from .proximal import CRGD, EXACT, PRGD, RGDA, rippa, rppa
from .solvers import (
    RGD_INVERSE_L,
    RGD_INVERSE_L_ZETA,
    RIPPA,
    Composite,
    StepRule,
    certified_radius,
    crgd,
    prgd,
    rgd,
    rgda,
    subgradient_rgd,
)

log = logging.getLogger("gcvx")

KARCHER_ALGOS = ("rgd-l", "rgd-zeta", "rgd-reduced", "subgrad", "prgd", "crgd", "rippa-prgd", "rippa-crgd", "rppa-exact")
MINMAX_ALGOS = ("rippa-rgda", "rgda")
MANIFOLDS = ("euclidean", "hyperbolic", "spd", "cap")
HEADER = ("iter", "f_gap", "dist_sq", "grad_norm", "oracle_calls", "wall_ns")
CAP_RADIUS = math.pi / 2 - 0.01
REF_GRAD_TOL = 1e-13
REF_MAX_ITERS = 100_000


@dataclass
class ExperimentConfig:
    manifold: str = "hyperbolic"
    dim: int = 50
    n_centers: int = 100
    radius: float = 1.0
    seed: int = 0
    algorithm: str = "rgd-l"
    eta: float = None
    max_iters: int = 1000
    inner_iters: int = 3
    tol: float = 1e-8
    coupling: float = 0.0
    mu: float = 0.0
    out: str = None
    format: str = "csv"
    timing: bool = False

    def validate(self, kind="karcher"):
        algos = KARCHER_ALGOS if kind == "karcher" else MINMAX_ALGOS
        checks = [
            (self.manifold in MANIFOLDS, f"unknown manifold {self.manifold!r}"),
            (self.algorithm in algos, f"unknown algorithm {self.algorithm!r} for {kind}"),
            (int(self.dim) >= 1, "dim must be positive"),
            (int(self.n_centers) >= 1, "need at least one center"),
            (self.radius > 0 and math.isfinite(self.radius), "radius must be positive"),
            (self.manifold != "cap" or self.radius < math.pi / 4, "cap experiments need radius < pi/4"),
            (int(self.seed) >= 0, "seed must be nonnegative"),
            (self.eta is None or self.eta > 0, "eta must be positive"),
            (int(self.max_iters) >= 1, "max_iters must be positive"),
            (int(self.inner_iters) >= 0, "inner_iters must be nonnegative"),
            (self.tol > 0, "tol must be positive"),
            (self.mu >= 0, "mu must be nonnegative"),
            (self.format in ("csv", "json"), "format is csv or json"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigInvalid(msg)
        return self


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


def make_manifold(config):
    return build(config.manifold, int(config.dim), CAP_RADIUS)


@dataclass
class KarcherInstance:
    manifold: object
    anchor: object
    centers: list
    x0: object
    R_upper: float


def generate_karcher(config):
    """Centers Exp(anchor, v_i) with v_i uniform in B(0, r), all but the first
    shrunk by 10; x0 drawn the same way without shrinking."""
    config.validate("karcher")
    M = make_manifold(config)
    rng = make_rng(config.seed)
    anchor = M.origin()
    r = float(config.radius)
    centers = []
    for i in range(int(config.n_centers)):
        v = uniform_tangent_ball(M, anchor, r, rng)
        centers.append(M.exp(anchor, v if i == 0 else v / 10.0))
    x0 = M.exp(anchor, uniform_tangent_ball(M, anchor, r, rng))
    R_upper = 2.0 * max(M.dist(y, anchor) for y in centers)
    return KarcherInstance(M, anchor, centers, x0, R_upper)


def compute_reference(f, start, radius):
    """RGD with eta = 1/L (L on B(start, radius)) until ||grad|| <= 1e-13.

    Returns (x_star, f_star, precise, iterations); ``precise`` is False when
    the final gradient norm is above 1e-12.
    """
    tr = rgd(f, start, StepRule.inverse_l(radius=radius, center=start), REF_MAX_ITERS, keep_every=0, grad_tol=REF_GRAD_TOL)
    return tr.last, tr.f_values[-1], tr.grad_norms[-1] <= 1e-12, tr.steps


def _row_values(f, M, x, f_star, x_star):
    val, g = f.value_and_gradient(x)
    return val - f_star, M.dist(x, x_star) ** 2, M.norm(x, g)


def karcher_experiment(config):
    """Run one Karcher experiment. Returns (rows, metadata)."""
    inst = generate_karcher(config)
    M, R = inst.manifold, inst.R_upper
    f = Karcher(M, inst.centers, reference=inst.anchor)
    x_star, f_star, precise, ref_iters = compute_reference(f, inst.anchor, R)
    T, tol, algo = int(config.max_iters), float(config.tol), config.algorithm
    meta = {"R_upper": R, "phi": PHI, "f_star": f_star, "reference_precise": precise, "reference_iters": ref_iters}
    kmin, kmax = M.kappa_min, M.kappa_max

    def cert(source):
        rho = certified_radius(source, M, R)
        D = 2.0 * rho
        meta.update(certificate_radius=rho, diameter=D, L=zeta(D, kmin), mu=max(delta(min(D, math.pi - 1e-9), kmax), 0.0))
        return rho, D

    monitor = f
    if algo in ("rgd-l", "rgd-reduced"):
        rho, D = cert(RGD_INVERSE_L)
        eta = config.eta or 1.0 / zeta(D, kmin)
        target = f
        if algo == "rgd-reduced":
            target = regularize(f, inst.x0, tol, R)
            eta = config.eta or 1.0 / (zeta(D, kmin) + target.coef * zeta(D + R, kmin))
            meta["regularizer"] = target.coef
        trace = rgd(target, inst.x0, StepRule.fixed(eta), T, f_star=f_star, tol=tol)
    elif algo == "rgd-zeta":
        rho, D = cert(RGD_INVERSE_L_ZETA)
        meta["zeta_rho"] = zeta(rho, kmin)
        eta = config.eta or 1.0 / (zeta(rho, kmin) * zeta(D, kmin))
        trace = rgd(f, inst.x0, StepRule.fixed(eta), T, f_star=f_star, tol=tol)
    elif algo == "subgrad":
        cert("subgradient")
        trace = subgradient_rgd(f, inst.x0, max(R, M.dist(inst.x0, x_star)), T, center=x_star)
        eta = trace.eta
    elif algo in ("prgd", "crgd"):
        radius = max(R / 2.0, M.dist(inst.anchor, inst.x0))
        L = f.smoothness_on(radius, inst.anchor)
        eta = config.eta or 1.0 / L
        meta.update(ball_radius=radius, L=L, mu=f.strong_convexity_on(radius, inst.anchor))
        if algo == "prgd":
            trace = prgd(f, inst.x0, (inst.anchor, radius), eta, T, f_star=f_star, tol=tol)
        else:
            trace = crgd(f, Composite.ball_indicator(inst.anchor, radius), inst.x0, T, L=1.0 / eta, f_star=f_star, tol=tol)
    else:
        if kmax > 0 and algo != "rppa-exact" and 5 * R * math.sqrt(kmax) >= math.pi:
            raise ConfigInvalid("inexact proximal runs on the cap need 5 * R_upper < pi; lower --radius")
        rho, D = cert(RIPPA)
        L = meta["L"]
        eta = config.eta or 1.0 / L
        if algo == "rppa-exact":
            trace = rppa(f, inst.x0, eta, T, f_star=f_star, tol=tol)
        else:
            inner = PRGD if algo == "rippa-prgd" else CRGD
            k = int(config.inner_iters) or None
            meta["inner_mode"] = "fixed" if k else "criterion"
            trace = rippa(f, inst.x0, eta, T, inner=inner, mu=0.0, R_bound=R, L=L, inner_iters=k, f_star=f_star, tol=tol)
    meta["eta"] = eta
    meta["zeta_R"] = zeta(R, kmin)
    meta["delta_R"] = delta(min(R, math.pi - 1e-9), kmax)
    rows = _rows(trace, lambda t, x: _row_values(monitor, M, x, f_star, x_star), config.timing)
    return rows, _finish_meta(meta, trace, rows, config)


def generate_minmax(config):
    config.validate("minmax")
    M = make_manifold(config)
    rng = make_rng(config.seed)
    o = M.origin()
    r = float(config.radius)
    a, b, x0, y0 = (M.exp(o, uniform_tangent_ball(M, o, r, rng)) for _ in range(4))
    return SaddleToy(M, M, a, b, config.coupling), (x0, y0)


def minmax_experiment(config):
    f, z0 = generate_minmax(config)
    P = f.manifold
    saddle = (f.a, f.b)
    R = P.dist(z0, saddle)
    rho = certified_radius(RIPPA, P, R)
    L = f.smoothness_on(2 * rho, saddle)
    mu = float(config.mu)
    eta = config.eta or 1.0 / L
    meta = {"R_upper": R, "phi": PHI, "L": L, "mu": mu, "eta": eta, "certificate_radius": rho, "coupling": f.coupling}
    T = int(config.max_iters)
    if config.algorithm == "rgda":
        trace = rgda(f, z0, eta, T)
        outputs = trace.iterates
    else:
        k = int(config.inner_iters) or None
        trace = rippa(f, z0, eta, T, inner=RGDA, mu=mu, R_bound=R, L=L, inner_iters=k, f_star=0.0, tol=config.tol)
        outputs = trace.iterates if mu > 0 else [z0] + trace.extras["averages"]
    def values(t, z):
        return f.duality_gap(outputs[t]), P.dist(z, saddle) ** 2, P.norm(z, f.field(z))

    rows = _rows(trace, values, config.timing)
    return rows, _finish_meta(meta, trace, rows, config)


def _rows(trace, values, timing):
    rows = []
    for t, x in enumerate(trace.iterates):
        gap, dsq, gn = values(t, x)
        wall = trace.wall_ns[t] if timing else 0
        rows.append((t, float(gap), float(dsq), float(gn), trace.oracle_calls[t], int(wall)))
    return rows


def _finish_meta(meta, trace, rows, config):
    increases = [r[0] for prev, r in zip(rows, rows[1:]) if r[2] > prev[2] * (1 + 1e-12) + 1e-300]
    if increases:
        log.warning("dist_sq increased at %d iterations (first at %d)", len(increases), increases[0])
    meta.update(
        config=asdict(config),
        steps=trace.steps,
        stop_reason=trace.stop_reason,
        converged=trace.converged,
        reached_tol=bool(rows) and rows[-1][1] <= config.tol,
        dist_sq_increases=increases[:50],
        monotone_violations=len(trace.violations),
        backend=_backend.BACKEND,
        numpy=np.__version__,
        platform=platform.machine(),
    )
    return meta


def _fmt(v):
    return str(v) if isinstance(v, int) else repr(float(v))


def write_outputs(rows, meta, out, fmt="csv"):
    """Write the trace (CSV or JSON) plus a sibling ``.meta.json``."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [",".join(HEADER)] + [",".join(_fmt(v) for v in row) for row in rows]
        out.write_bytes(("\n".join(lines) + "\n").encode())
    else:
        payload = [dict(zip(HEADER, row)) for row in rows]
        out.write_text(json.dumps(payload) + "\n")
    meta_path = out.with_name(out.name + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    return out, meta_path


def run_experiment(config, kind="karcher"):
    """Run and, when ``config.out`` is set, write the files. Returns (rows, meta)."""
    fn = karcher_experiment if kind == "karcher" else minmax_experiment
    rows, meta = fn(config)
    if config.out:
        write_outputs(rows, meta, config.out, config.format)
    return rows, meta


def flush_partial(trace, config, reason):
    """Write whatever a failed run recorded before the error."""
    if not config.out or trace is None:
        return
    rows = [(t, float(v), float("nan"), float(g), c, 0) for t, (v, g, c) in enumerate(zip(trace.f_values, trace.grad_norms, trace.oracle_calls))]
    write_outputs(rows, {"error": reason, "config": asdict(config), "partial": True}, config.out, config.format)


__all__ = [
    "ExperimentConfig",
    "KarcherInstance",
    "generate_karcher",
    "generate_minmax",
    "compute_reference",
    "run_experiment",
    "write_outputs",
    "project_ball",
]
