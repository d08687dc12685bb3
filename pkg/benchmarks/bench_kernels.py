#!/usr/bin/env python
"""Time the numba and numpy paths of every hot kernel on identical inputs.

Usage: python benchmarks/bench_kernels.py [--repeat R] [--qubits 10,14,16]
The first numba call of each kernel is a warm-up and is not timed.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from erasekit import kernels
from erasekit._accel import NUMBA_IMPORTABLE


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(qubits: list[int]):
    rng = np.random.default_rng(0)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    u4 = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    for n in qubits:
        vec = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        mid = np.array([n // 2])
        pair = np.array([0, n - 1])
        yield (f"apply_matrix 1q  n={n}",
               lambda f, v=vec: f(v.copy(), h, mid, 0, 0), "apply_matrix")
        yield (f"apply_matrix 2q  n={n}",
               lambda f, v=vec: f(v.copy(), u4, pair, 0, 0), "apply_matrix")
        yield (f"apply_pauli      n={n}",
               lambda f, v=vec, n=n: f(v, (1 << n) - 1, 0b1011 % (1 << n)), "apply_pauli")
    for size in (10**4, 10**6):
        yield (f"bath_work  |E|={size:.0e}", lambda f, s=size: f(s, 1.0), "bath_work")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--qubits", default="10,14,16")
    args = p.parse_args()
    qubits = [int(q) for q in args.qubits.split(",")]
    print(f"{'kernel':28s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}  agree")
    for label, call, name in _cases(qubits):
        f_np = getattr(kernels, f"{name}_numpy")
        t_np = _best(lambda: call(f_np), args.repeat)
        if not NUMBA_IMPORTABLE:
            print(f"{label:28s} {t_np * 1e3:11.3f} {'n/a':>11s}")
            continue
        f_nb = getattr(kernels, f"{name}_numba")
        ref, got = call(f_np), call(f_nb)  # warm-up doubles as the agreement check
        agree = np.allclose(ref, got, atol=1e-10)
        t_nb = _best(lambda: call(f_nb), args.repeat)
        print(f"{label:28s} {t_np * 1e3:11.3f} {t_nb * 1e3:11.3f} {t_np / t_nb:8.2f}  {agree}")


if __name__ == "__main__":
    main()
