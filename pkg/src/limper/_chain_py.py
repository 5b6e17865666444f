"""Pure-Python/numpy transfer-chain kernels.

Both kernels apply the one-step matrices [[E-v, -1], [1, 0]] for a run of
potential values in site order (rightmost factor first) and renormalize
the running product to max-abs entry in [1/2, 1) after every step using
exact power-of-two scaling.  They return the normalized entries plus the
accumulated binary exponent, so results are bit-identical between the
scalar, batched, and compiled variants.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def chain_scalar(E: float, values, a: float, b: float, c: float, d: float,
                 ex: int) -> tuple[float, float, float, float, int]:
    """Left-multiply the chain for one energy onto (a,b,c,d, 2^ex)."""
    for v in values:
        t = E - v
        na = t * a - c
        nb = t * b - d
        c = a
        d = b
        a = na
        b = nb
        m = max(abs(a), abs(b), abs(c), abs(d))
        e = math.frexp(m)[1]
        if e:
            s = math.ldexp(1.0, -e)
            a *= s
            b *= s
            c *= s
            d *= s
            ex += e
    return a, b, c, d, ex


def chain_batch(E: np.ndarray, values, a: np.ndarray, b: np.ndarray,
                c: np.ndarray, d: np.ndarray, ex: np.ndarray) -> None:
    """Vectorized-over-energy variant; updates the arrays in place."""
    for v in values:
        t = E - v
        na = t * a - c
        nb = t * b - d
        np.copyto(c, a)
        np.copyto(d, b)
        np.copyto(a, na)
        np.copyto(b, nb)
        m = np.maximum(np.maximum(np.abs(a), np.abs(b)),
                       np.maximum(np.abs(c), np.abs(d)))
        e = np.frexp(m)[1]
        if e.any():
            s = np.ldexp(1.0, -e)
            a *= s
            b *= s
            c *= s
            d *= s
            ex += e
