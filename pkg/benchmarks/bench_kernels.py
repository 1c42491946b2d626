"""Numba vs numpy timings for the dilogarithm strip kernel and a full log_phi call.

Run with ``python3 benchmarks/bench_kernels.py [--points N] [--repeat R]``.
The numba column includes nothing from compilation: one warm-up call runs first.
``QWHIT_NUMBA=0`` in the environment only changes which kernel log_phi picks,
the strip rows below always time both.
"""

import argparse
import time

import numpy as np

from qwhit import _accel
from qwhit.qdilog import ModularParameter, log_phi, log_phi_strip


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def sample_points(n, b, rng):
    half = 0.5 * (b + 1 / b)
    # mix of slow (|Re z| < 2) and rotated-ray (|Re z| >= 2) points
    re = np.concatenate([rng.uniform(-2, 2, n // 2), rng.uniform(2, 12, n - n // 2) * rng.choice([-1, 1], n - n // 2)])
    im = rng.uniform(-0.8, 0.8, n) * half
    return re + 1j * im


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--tol", type=float, default=1e-12)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"numba available: {_accel.HAVE_NUMBA}, selected for log_phi: {_accel.USE_NUMBA}")
    print(f"{'b':>5} {'kernel':>10} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8} {'max |diff|':>11}")
    for b in (0.6, 1.0, 1.3):
        z = sample_points(args.points, b, rng)
        log_phi_strip(z[:4], b, args.tol, use_numba=True)  # compile
        ref, _ = log_phi_strip(z, b, args.tol, use_numba=False)
        fast, _ = log_phi_strip(z, b, args.tol, use_numba=True)
        t_np = best_of(lambda: log_phi_strip(z, b, args.tol, use_numba=False), args.repeat)
        t_nb = best_of(lambda: log_phi_strip(z, b, args.tol, use_numba=True), args.repeat)
        diff = np.abs(ref - fast).max()
        print(f"{b:5.2f} {'strip':>10} {t_np:11.4f} {t_nb:11.4f} {t_np / t_nb:8.1f} {diff:11.2e}")

        P = ModularParameter(b)
        wide = rng.uniform(-6, 6, args.points) + 1j * rng.uniform(-2.5, 2.5, args.points)
        log_phi(wide[:4], P, args.tol)
        t = best_of(lambda: log_phi(wide, P, args.tol), args.repeat)
        print(f"{b:5.2f} {'log_phi':>10} {'':>11} {t:11.4f} {'':>8} {'':>11}  ({1e6 * t / args.points:.1f} us/point, selected kernel)")


if __name__ == "__main__":
    main()
