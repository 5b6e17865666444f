"""Deterministic threaded Lyapunov sweeps over energy grids.

Each grid point is a pure function of (energy, recipe, length), so the
sweep splits the grid into contiguous chunks, evaluates them on a
thread pool, and reassembles results in chunk order.  Output bytes are
therefore identical for every thread count; threads only change wall
time.  The thread count comes from the LIMPER_THREADS environment
variable when set, else the explicit argument, else one.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .recipes import PotentialRecipe
from .transfer import finite_lyapunov, monodromy_batch

_LN2 = math.log(2.0)


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: LIMPER_THREADS env wins, then the argument, then 1."""
    env = os.environ.get("LIMPER_THREADS")
    if env is not None:
        n = int(env)
    elif threads is not None:
        n = int(threads)
    else:
        n = 1
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    return n


def _sweep_chunk(
    recipe: PotentialRecipe, xs: np.ndarray, length: int | None
) -> list[tuple[float, float, bool]]:
    """(E, L, in_spectrum) rows for one contiguous grid chunk."""
    _sign, logabs = monodromy_batch(xs, recipe).trace_signlog()
    inside = logabs <= _LN2
    p = recipe.period
    if length is None:
        L = np.zeros_like(logabs)
        big = logabs > 50.0
        L[big] = logabs[big] / p
        mid = ~big & ~inside
        L[mid] = np.arccosh(np.exp(logabs[mid]) / 2.0) / p
    else:
        L = np.array([finite_lyapunov(float(E), recipe, length) for E in xs])
    return [(float(E), float(l), bool(i)) for E, l, i in zip(xs, L, inside)]


def lyapunov_sweep(
    recipe: PotentialRecipe,
    energies,
    length: int | None = None,
    threads: int | None = None,
) -> list[tuple[float, float, bool]]:
    """Sweep the exponent over an energy grid, in deterministic order.

    ``length=None`` uses the exact periodic trace formula (zero on the
    spectrum); an explicit length evaluates the finite-size exponent
    log ||A_N|| / N instead.  ``in_spectrum`` always reflects the exact
    trace criterion |tr| <= 2.
    """
    xs = np.asarray(energies, dtype=np.float64)
    if xs.ndim != 1:
        raise ValueError("energies must be a one-dimensional grid")
    if xs.size == 0:
        return []
    workers = resolve_threads(threads)
    chunks = np.array_split(xs, min(workers * 4, xs.size))
    if workers == 1:
        parts = [_sweep_chunk(recipe, chunk, length) for chunk in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda c: _sweep_chunk(recipe, c, length), chunks)
            )
    return [row for part in parts for row in part]
