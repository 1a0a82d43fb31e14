"""Timing of the compiled kernels against the pure-Python fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from bifoliation import _kernels_py as pure

try:
    from bifoliation import _speedups as fast
except ImportError:  # extension not built
    fast = None


def _eigen_job(mod, mats):
    def run():
        for M in mats:
            mod.aberth(mod.charpoly(M))
    return run


def _orbit_job(mod, steps):
    q = np.array([0.0, 1.0, 0.8])

    def run():
        mod.hopf_stereo_orbit(q, 0.8, steps)
    return run


def _inverse_job(mod, pts):
    def run():
        for q in pts:
            mod.hopf_stereo_inverse(q, 0.6)
    return run


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    mats = [rng.standard_normal((4, 4)) for _ in range(500)]
    pts = rng.uniform(-3, 3, (500, 3))
    jobs = {
        "charpoly+aberth, 500 4x4 matrices": lambda m: _eigen_job(m, mats),
        "hopf_stereo orbit, 1000 steps": lambda m: _orbit_job(m, 1000),
        "hopf_stereo inverse, 500 points": lambda m: _inverse_job(m, pts),
    }
    print(f"{'kernel':<38} {'python [s]':>11} {'cython [s]':>11} {'speedup':>8}")
    for name, make in jobs.items():
        tp = min(timeit.repeat(make(pure), number=1, repeat=args.repeat))
        if fast is None:
            print(f"{name:<38} {tp:11.4f} {'n/a':>11} {'n/a':>8}")
            continue
        tc = min(timeit.repeat(make(fast), number=1, repeat=args.repeat))
        print(f"{name:<38} {tp:11.4f} {tc:11.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
