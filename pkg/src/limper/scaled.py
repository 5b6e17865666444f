"""Overflow-safe 2x2 matrices: unit-scale entries plus a log factor.

A ``ScaledMatrix2`` represents ``exp(logscale) * entries`` where the
max-abs entry of ``entries`` is kept in [1/2, 2].  Renormalization uses
power-of-two scaling (frexp/ldexp), so entry division is exact and the
scalar and batched code paths produce bit-identical results.

``BatchScaled`` is the same object vectorized over a trailing energy
axis; it backs the batched discriminant scans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_LN2 = math.log(2.0)


def _spectral_norm_sq(a, b, c, d):
    # largest eigenvalue of M^T M for M = [[a,b],[c,d]], closed form
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = s * s - 4.0 * det * det
    if isinstance(disc, np.ndarray):
        disc = np.maximum(disc, 0.0)
        return 0.5 * (s + np.sqrt(disc))
    return 0.5 * (s + math.sqrt(max(disc, 0.0)))


@dataclass(frozen=True)
class ScaledMatrix2:
    a: float
    b: float
    c: float
    d: float
    log: float = 0.0

    @staticmethod
    def identity() -> "ScaledMatrix2":
        return ScaledMatrix2(1.0, 0.0, 0.0, 1.0, 0.0)

    @staticmethod
    def from_array(m, log: float = 0.0) -> "ScaledMatrix2":
        out = ScaledMatrix2(float(m[0][0]), float(m[0][1]),
                            float(m[1][0]), float(m[1][1]), log)
        return out._renormalized()

    def _renormalized(self) -> "ScaledMatrix2":
        m = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if m == 0.0:
            raise ZeroDivisionError("zero matrix cannot be scale-normalized")
        e = math.frexp(m)[1]
        if e == 0:
            return self
        s = math.ldexp(1.0, -e)
        return ScaledMatrix2(self.a * s, self.b * s, self.c * s, self.d * s,
                             self.log + e * _LN2)

    def __matmul__(self, other: "ScaledMatrix2") -> "ScaledMatrix2":
        x, y = self, other
        return ScaledMatrix2(
            x.a * y.a + x.b * y.c,
            x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c,
            x.c * y.b + x.d * y.d,
            x.log + y.log,
        )._renormalized()

    def pow(self, n: int) -> "ScaledMatrix2":
        """n-th power by binary squaring; n is any nonnegative integer."""
        if n < 0:
            raise ValueError("negative powers not supported")
        result = ScaledMatrix2.identity()
        base = self
        while n:
            if n & 1:
                result = result @ base
            n >>= 1
            if n:
                base = base @ base
        return result

    # -- scalar views -------------------------------------------------

    def entries(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def to_array(self) -> np.ndarray:
        """Dense value; overflows to inf for large logscale."""
        with np.errstate(over="ignore"):
            return np.exp(self.log) * self.entries()

    def det_residual(self) -> float:
        """|det - 1| of the represented matrix, in relative log units."""
        det_e = self.a * self.d - self.b * self.c
        if det_e <= 0.0:
            # represented det is det_e * e^{2 log}; sign flip means failure
            return math.inf
        return abs(math.log(det_e) + 2.0 * self.log)

    def log_norm(self) -> float:
        """log of the spectral norm of the represented matrix."""
        return self.log + 0.5 * math.log(_spectral_norm_sq(
            self.a, self.b, self.c, self.d))

    def trace_signlog(self) -> tuple[int, float]:
        """(sign, log|tr|) of the represented matrix; (0, -inf) if tr = 0."""
        t = self.a + self.d
        if t == 0.0:
            return 0, -math.inf
        return (1 if t > 0.0 else -1), self.log + math.log(abs(t))

    def trace_value(self) -> float:
        """tr as a float; +-inf when too large to represent."""
        sign, logabs = self.trace_signlog()
        if sign == 0:
            return 0.0
        if logabs > 709.0:
            return math.inf if sign > 0 else -math.inf
        return sign * math.exp(logabs)

    def apply(self, vec) -> tuple[np.ndarray, float]:
        """Multiply a 2-vector; returns (unit vector, log of its norm)."""
        v = np.asarray(vec, dtype=float)
        w = self.entries() @ v
        n = float(np.hypot(w[0], w[1]))
        if n == 0.0:
            return w, -math.inf
        return w / n, self.log + math.log(n)


class BatchScaled:
    """ScaledMatrix2 vectorized over energies: four arrays plus log array."""

    __slots__ = ("a", "b", "c", "d", "log")

    def __init__(self, a, b, c, d, log):
        self.a, self.b, self.c, self.d, self.log = a, b, c, d, log

    @staticmethod
    def identity(n: int) -> "BatchScaled":
        z = np.zeros(n)
        return BatchScaled(np.ones(n), z.copy(), z.copy(), np.ones(n), z.copy())

    def _renormalize(self) -> None:
        m = np.maximum(np.maximum(np.abs(self.a), np.abs(self.b)),
                       np.maximum(np.abs(self.c), np.abs(self.d)))
        e = np.frexp(m)[1]
        if not e.any():
            return
        s = np.ldexp(1.0, -e)
        self.a *= s
        self.b *= s
        self.c *= s
        self.d *= s
        self.log += e * _LN2

    def matmul(self, other: "BatchScaled") -> "BatchScaled":
        x, y = self, other
        out = BatchScaled(
            x.a * y.a + x.b * y.c,
            x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c,
            x.c * y.b + x.d * y.d,
            x.log + y.log,
        )
        out._renormalize()
        return out

    def pow(self, n: int) -> "BatchScaled":
        if n < 0:
            raise ValueError("negative powers not supported")
        result = BatchScaled.identity(len(self.a))
        base = self
        while n:
            if n & 1:
                result = result.matmul(base)
            n >>= 1
            if n:
                base = base.matmul(base)
        return result

    def copy(self) -> "BatchScaled":
        return BatchScaled(self.a.copy(), self.b.copy(), self.c.copy(),
                           self.d.copy(), self.log.copy())

    def log_norm(self) -> np.ndarray:
        return self.log + 0.5 * np.log(_spectral_norm_sq(
            self.a, self.b, self.c, self.d))

    def trace_signlog(self) -> tuple[np.ndarray, np.ndarray]:
        t = self.a + self.d
        sign = np.sign(t).astype(np.int8)
        with np.errstate(divide="ignore"):
            logabs = np.where(t == 0.0, -np.inf, self.log + np.log(np.abs(t)))
        return sign, logabs

    def trace_value(self) -> np.ndarray:
        """tr as floats; overflows saturate to +-inf."""
        sign, logabs = self.trace_signlog()
        with np.errstate(over="ignore"):
            return np.where(sign == 0, 0.0, sign * np.exp(np.minimum(logabs, 745.0)))

    def at(self, i: int) -> ScaledMatrix2:
        return ScaledMatrix2(float(self.a[i]), float(self.b[i]),
                             float(self.c[i]), float(self.d[i]),
                             float(self.log[i]))
