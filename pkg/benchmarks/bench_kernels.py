"""Compare the compiled kernels against the pure-numpy fallbacks.

Times the two hot paths on production-shaped inputs: B-spline design
matrices on a clamped device knot vector, and the driven RK4 propagator
at the default retained-state count.  Run as

    python3 benchmarks/bench_kernels.py [--repeats N]

The import below picks up whichever backend the package selected; the
fallback module is timed directly, so the comparison works even when
QDEXCITON_FORCE_PYTHON is set (both columns then time the same code).
"""

import argparse
import time

import numpy as np

from qdexciton import bsplines
from qdexciton._kernels import BACKEND, _pykernels
from qdexciton.constants import HBAR

try:
    from qdexciton._kernels import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_design(repeats):
    kv = bsplines.uniform_knots(63.42, 160, 5)
    x = np.linspace(1e-6, 63.42 - 1e-6, 2000)

    jobs = {"python": lambda: _pykernels.design_matrix(kv.knots, kv.order, x, 1)}
    if _ckernels is not None:
        jobs["cython"] = lambda: _ckernels.design_matrix(kv.knots, kv.order, x, 1)
    return {name: best_of(fn, repeats) for name, fn in jobs.items()}


def bench_rk4(repeats):
    rng = np.random.default_rng(3)
    d = 31
    diag = np.concatenate(([0.0], np.sort(rng.uniform(0.5, 0.7, d - 1))))
    coupling = rng.normal(scale=0.5, size=d - 1)
    args = (diag, coupling, 1e-2, 0.82, 0.019, 80000, 400, HBAR)

    jobs = {"python": lambda: _pykernels.rk4_drive(*args)}
    if _ckernels is not None:
        jobs["cython"] = lambda: _ckernels.rk4_drive(*args)
    return {name: best_of(fn, repeats) for name, fn in jobs.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    print(f"active backend: {BACKEND}")
    if _ckernels is None:
        print("compiled module not importable; timing the fallback only\n")

    rows = [
        ("design_matrix (160 intervals, k=5, 2000 pts, deriv=1)", bench_design(args.repeats)),
        ("rk4_drive (31 levels, 80000 steps)", bench_rk4(args.repeats)),
    ]
    for label, t in rows:
        line = f"{label:55s}"
        line += f"  python {1e3 * t['python']:8.2f} ms"
        if "cython" in t:
            line += f"  cython {1e3 * t['cython']:8.2f} ms"
            line += f"  speedup {t['python'] / t['cython']:5.1f}x"
        print(line)


if __name__ == "__main__":
    main()
