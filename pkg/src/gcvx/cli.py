"""Command line entry point: ``gcvx karcher``, ``gcvx minmax``, ``gcvx verify``.

Exit codes: 0 success, 1 failed checks, 2 bad configuration, 3 solver failure.
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields

from .errors import ConfigInvalid, CouplingUnsupported, Diverged, GcvxError, InnerBudgetExceeded
from .harness import KARCHER_ALGOS, MANIFOLDS, MINMAX_ALGOS, ExperimentConfig, flush_partial, run_experiment

log = logging.getLogger("gcvx")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
SUITES = ("geometry", "prox", "solvers", "moreau", "minmax")


def _experiment_flags(p, algos, default_algo):
    p.add_argument("--manifold", choices=MANIFOLDS, default="hyperbolic")
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--centers", dest="n_centers", type=int, default=100)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algo", dest="algorithm", choices=algos, default=default_algo)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--inner-iters", type=int, default=3, help="0 switches to the residual criterion")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--timing", action="store_true", help="record wall_ns (breaks byte-identical output)")
    p.add_argument("--batch", default=None, help="JSON list of config overrides, run in parallel")
    p.add_argument("--jobs", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="gcvx", description="Geodesically convex optimization experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    k = sub.add_parser("karcher", help="Karcher mean experiment")
    _experiment_flags(k, KARCHER_ALGOS, "rgd-l")
    m = sub.add_parser("minmax", help="saddle point experiment")
    _experiment_flags(m, MINMAX_ALGOS, "rippa-rgda")
    m.add_argument("--coupling", type=float, default=0.0)
    m.add_argument("--mu", type=float, default=0.0, help="strong convexity used by the inexactness schedule")
    m.set_defaults(dim=2, n_centers=1)
    v = sub.add_parser("verify", help="run a property check suite")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=int, default=None)
    v.add_argument("--tolerance", type=float, default=None, help="override every check tolerance")
    v.add_argument("--out", default=None)
    return parser


def _config(ns, overrides=None):
    names = {f.name for f in fields(ExperimentConfig)}
    values = {k: v for k, v in vars(ns).items() if k in names}
    for key, val in (overrides or {}).items():
        key = {"algo": "algorithm", "centers": "n_centers"}.get(key, key).replace("-", "_")
        if key not in names:
            raise ConfigInvalid(f"unknown config key {key!r}")
        values[key] = val
    return ExperimentConfig(**values)


def _run_one(config, kind):
    try:
        _, meta = run_experiment(config, kind)
    except (ConfigInvalid, CouplingUnsupported) as err:
        log.error("configuration error: %s", err)
        return EXIT_CONFIG
    except (Diverged, InnerBudgetExceeded) as err:
        log.error("solver failure: %s", err)
        flush_partial(getattr(err, "trace", None), config, str(err))
        return EXIT_SOLVER
    except GcvxError as err:
        log.error("solver failure: %s", err)
        return EXIT_SOLVER
    log.info("%s %s: %d steps, stop=%s", kind, config.algorithm, meta["steps"], meta["stop_reason"])
    if not config.out:
        print(json.dumps({k: meta[k] for k in ("steps", "stop_reason", "reached_tol", "eta", "R_upper")}))
    return EXIT_OK


def _experiment(ns, kind):
    try:
        if not ns.batch:
            return _run_one(_config(ns).validate(kind), kind)
        with open(ns.batch) as fh:
            entries = json.load(fh)
        configs = [_config(ns, e).validate(kind) for e in entries]
    except (ConfigInvalid, CouplingUnsupported, OSError, ValueError, TypeError) as err:
        log.error("configuration error: %s", err)
        return EXIT_CONFIG
    if any(not c.out for c in configs) or len({c.out for c in configs}) < len(configs):
        log.error("configuration error: every batch entry needs its own 'out' path")
        return EXIT_CONFIG
    with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
        codes = list(pool.map(_run_one, configs, [kind] * len(configs)))
    return max(codes)


def _verify(ns):
    from .verification import run_suite, write_reports

    suites = SUITES if ns.suite == "all" else (ns.suite,)
    reports = []
    for name in suites:
        reports.extend(run_suite(name, ns.seed, ns.samples, tolerance=ns.tolerance))
    write_reports(reports, ns.out)
    failed = [r for r in reports if not r.passed]
    for r in failed:
        log.error("check failed: %s (max_violation %.3e > %.3e)", r.name, r.max_violation, r.tolerance)
    return EXIT_CHECK if failed else EXIT_OK


def main(argv=None):
    logging.basicConfig(level=os.environ.get("GCVX_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    ns = build_parser().parse_args(argv)
    if ns.command == "verify":
        return _verify(ns)
    return _experiment(ns, ns.command)


if __name__ == "__main__":
    sys.exit(main())
