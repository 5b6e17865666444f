"""Timing comparison of the transfer-chain kernel backends.

Runs the scalar and batched chain kernels from both the pure backend
and the compiled one (when available) over the same inputs, checks that
their outputs agree bit for bit, and prints a small table of timings.

Usage: python3 benchmarks/bench_chain.py [chain_length] [grid_size]
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from limper import _chain_py  # noqa: E402

try:
    from limper import _chain_cy
except ImportError:
    _chain_cy = None


def _time(fn, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(length: int, grid: int) -> None:
    rng = np.random.default_rng(7)
    values = rng.uniform(-2.0, 2.0, size=length)
    energies = np.linspace(-3.0, 3.0, grid)
    E0 = 0.731

    backends = [("python", _chain_py)]
    if _chain_cy is not None:
        backends.append(("cython", _chain_cy))

    results = {}
    rows = []
    for name, impl in backends:
        t_scalar = _time(
            lambda: impl.chain_scalar(E0, values, 1.0, 0.0, 0.0, 1.0, 0)
        )
        out_scalar = impl.chain_scalar(E0, values, 1.0, 0.0, 0.0, 1.0, 0)

        def run_batch(impl=impl):
            a = np.ones(grid)
            b = np.zeros(grid)
            c = np.zeros(grid)
            d = np.ones(grid)
            ex = np.zeros(grid, dtype=np.int64)
            impl.chain_batch(energies, values, a, b, c, d, ex)
            return a, b, c, d, ex

        t_batch = _time(run_batch)
        out_batch = run_batch()
        results[name] = (out_scalar, out_batch)
        rows.append((f"scalar-{name}", t_scalar, length / t_scalar))
        rows.append((f"batched-{name}", t_batch, length * grid / t_batch))

    if len(results) == 2:
        ps, pb = results["python"]
        cs, cb = results["cython"]
        assert ps == cs, "scalar backends disagree"
        for x, y in zip(pb, cb):
            assert np.array_equal(x, y), "batched backends disagree"
        print("backends agree bit for bit\n")

    print(f"chain length {length}, energy grid {grid}")
    print(f"{'kernel':<18} {'best time':>12} {'steps/s':>14}")
    for name, t, rate in rows:
        print(f"{name:<18} {t:>10.4f} s {rate:>14.3g}")


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000
    g = int(sys.argv[2]) if len(sys.argv) > 2 else 256
    bench(n, g)
