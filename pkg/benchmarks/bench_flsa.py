"""Timing comparison of the compiled and pure-Python FLSA kernels.

Run after installing the package:

    python benchmarks/bench_flsa.py

Reports per-call times for the row-batched proximal solve at the problem
sizes the fitting loop actually uses, plus a single large-signal case.
"""

from __future__ import annotations

import time

import numpy as np

from dfsl.flsa import _py_impl

try:
    from dfsl._native import _flsa as _native
except ImportError:
    _native = None


def _time(fn, *args, repeats: int = 5) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    rng = np.random.default_rng(0)
    cases = [
        ("fit step, small model (p=8, n=40)", (8, 40)),
        ("fit step, medium model (p=12, n=128)", (12, 128)),
        ("long signal batch (p=64, n=4096)", (64, 4096)),
    ]
    print(f"{'case':40s} {'pure (ms)':>12s} {'native (ms)':>12s} {'speedup':>9s}")
    for label, (rows, n) in cases:
        Z = np.ascontiguousarray(rng.standard_normal((rows, n)))
        t_py = _time(_py_impl.solve_rows, Z, 0.1, 0.1)
        if _native is None:
            print(f"{label:40s} {1e3 * t_py:12.3f} {'n/a':>12s} {'n/a':>9s}")
            continue
        t_nat = _time(_native.solve_rows, Z, 0.1, 0.1)
        out_py = _py_impl.solve_rows(Z, 0.1, 0.1)
        out_nat = _native.solve_rows(Z, 0.1, 0.1)
        agree = np.abs(out_py - out_nat).max()
        print(f"{label:40s} {1e3 * t_py:12.3f} {1e3 * t_nat:12.3f} "
              f"{t_py / t_nat:8.1f}x   (max diff {agree:.2e})")
    if _native is None:
        print("\nnative extension not built; only pure-Python timings shown")


if __name__ == "__main__":
    main()
