"""Benchmark the compiled history kernel against the numpy fallback.

The fractional predictor-corrector carries the full solution history: at
step n it forms sum_{j=0}^{n} W[n-j, i] * F[j, i] for every component i.
This script times that convolution for both backends on grids of
increasing length and prints a small table.

Run from the repository root:

    python benchmarks/bench_history.py
"""

import time

import numpy as np

from fracstab import _history


def run_solver_like(backend, F, W):
    """Mimic the per-step access pattern of the predictor-corrector."""
    N = F.shape[0] - 1
    ncomp = F.shape[1]
    out = np.empty(ncomp)
    t0 = time.perf_counter()
    acc = 0.0
    for n in range(N + 1):
        backend(F, W, n, 0, out)
        acc += out[0]
    dt = time.perf_counter() - t0
    return dt, acc


def main():
    rng = np.random.default_rng(20260823)
    try:
        from fracstab import _history_ext

        compiled = _history_ext.weighted_history
    except ImportError:
        compiled = None

    print(f"active backend: {_history.BACKEND}")
    print(f"{'N':>8} {'ncomp':>6} {'numpy [s]':>12} {'cython [s]':>12} {'speedup':>9}")
    for N in (500, 1000, 2000, 4000, 8000):
        for ncomp in (1, 4):
            F = rng.standard_normal((N + 1, ncomp))
            W = np.ascontiguousarray(np.abs(rng.standard_normal((N + 1, ncomp))))
            t_np, a1 = run_solver_like(_history._weighted_history_numpy, F, W)
            if compiled is None:
                print(f"{N:>8} {ncomp:>6} {t_np:>12.4f} {'n/a':>12} {'n/a':>9}")
                continue
            t_cy, a2 = run_solver_like(compiled, F, W)
            assert abs(a1 - a2) <= 1e-9 * max(1.0, abs(a1)), "backend mismatch"
            print(f"{N:>8} {ncomp:>6} {t_np:>12.4f} {t_cy:>12.4f} {t_np / t_cy:>8.2f}x")


if __name__ == "__main__":
    main()
