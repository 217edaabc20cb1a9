"""Time the compiled Karcher kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 200]

Also times a full RGD run on the default hyperbolic experiment under both
backends (the fallback is forced through GCVX_BACKEND=python in a child process).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from gcvx import _kernels_py
from gcvx.manifolds import Hyperbolic, SphericalCap, uniform_tangent_ball

try:
    from gcvx import _kernels as compiled
except ImportError:
    compiled = None


def points(M, n, rng):
    o = M.origin()
    Y = np.stack([M.exp(o, uniform_tangent_ball(M, o, 1.0, rng)) for _ in range(n)])
    return M.exp(o, uniform_tangent_ball(M, o, 0.5, rng)), Y, np.full(n, 1.0 / n)


def bench_kernels(repeat):
    rng = np.random.Generator(np.random.Philox(0))
    rows = []
    for M, name in ((Hyperbolic(50), "hyperboloid_karcher"), (SphericalCap(50), "sphere_karcher")):
        for n in (10, 100, 1000):
            x, Y, w = points(M, n, rng)
            py = getattr(_kernels_py, name)
            t_py = min(timeit.repeat(lambda: py(x, Y, w), number=repeat, repeat=3)) / repeat
            if compiled is None:
                rows.append((name, n, t_py, float("nan")))
                continue
            c = getattr(compiled, name)
            gap = np.abs(py(x, Y, w)[1] - c(x, Y, w)[1]).max()
            t_c = min(timeit.repeat(lambda: c(x, Y, w), number=repeat, repeat=3)) / repeat
            rows.append((name, n, t_py, t_c, gap))
    print(f"{'kernel':<22}{'n':>6}{'numpy us':>12}{'compiled us':>14}{'speedup':>9}{'max diff':>11}")
    for name, n, t_py, t_c, *gap in rows:
        diff = f"{gap[0]:.1e}" if gap else "-"
        print(f"{name:<22}{n:>6}{t_py * 1e6:>12.2f}{t_c * 1e6:>14.2f}{t_py / t_c:>9.2f}{diff:>11}")


def bench_experiment():
    code = (
        "import time;from gcvx.harness import ExperimentConfig, run_experiment;from gcvx import BACKEND;"
        "t=time.perf_counter();run_experiment(ExperimentConfig(algorithm='rgd-l'));"
        "print(BACKEND, round(time.perf_counter()-t, 3))"
    )
    for backend in ("compiled", "python"):
        env = dict(os.environ, GCVX_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        print("rgd-l on H^50, n=100 (incl. reference solve):", out.stdout.strip(), "s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    bench_kernels(args.repeat)
    bench_experiment()
