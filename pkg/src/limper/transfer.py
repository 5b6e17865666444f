"""Transfer matrices, monodromy, and Lyapunov exponents for periodic potentials.

The transfer matrix over N sites is the ordered product of one-step
matrices [[E - V(n), -1], [1, 0]] for n = N-1 down to 0, acting on
column vectors (u(n), u(n-1)).  For a recipe the full-period product
(the monodromy) is computed by recursion over the overlay stack: the
product over a block with constant shift s equals the unshifted product
at energy E - s, so each level reduces to powers of the previous level
at a handful of shifted energies.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .chain import chain_transfer, chain_transfer_batch
from .errors import LimperError, NotInSpectrumError, PeriodTooLargeError
from .recipes import PotentialRecipe
from .scaled import BatchScaled, ScaledMatrix2

_LN2 = math.log(2.0)

#: Largest scaled-entry log at which the 2x2 eigenvector problem still
#: resolves the two Bloch directions in double precision.
_BLOCH_LOG_LIMIT = 25.0


def one_step(E: float, v: float) -> np.ndarray:
    """Single-site transfer matrix as a plain array."""
    return np.array([[E - v, -1.0], [1.0, 0.0]])


def naive_transfer(E: float, recipe: PotentialRecipe, N: int) -> ScaledMatrix2:
    """Reference product over N sites, evaluated term by term."""
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    return chain_transfer(E, recipe.values(0, N))


@lru_cache(maxsize=4096)
def _monodromy_cached(E: float, recipe: PotentialRecipe) -> ScaledMatrix2:
    if not recipe.overlays:
        return chain_transfer(E, recipe.materialize())
    prev = recipe.parent()
    ov = recipe.overlays[-1]
    acc = ScaledMatrix2.identity()
    if ov.copies:
        acc = _monodromy_cached(E, prev).pow(ov.refine * ov.copies)
    for s in ov.shifts:
        acc = _monodromy_cached(E - s, prev).pow(ov.refine) @ acc
    return acc


def monodromy(E: float, recipe: PotentialRecipe) -> ScaledMatrix2:
    """Transfer matrix over one full period."""
    return _monodromy_cached(float(E), recipe)


def monodromy_batch(E, recipe: PotentialRecipe) -> BatchScaled:
    """Monodromy evaluated for a whole energy grid at once."""
    Ea = np.ascontiguousarray(E, dtype=np.float64)
    if not recipe.overlays:
        return chain_transfer_batch(Ea, recipe.materialize())
    prev = recipe.parent()
    ov = recipe.overlays[-1]
    acc = BatchScaled.identity(Ea.shape[0])
    if ov.copies:
        acc = monodromy_batch(Ea, prev).pow(ov.refine * ov.copies)
    for s in ov.shifts:
        acc = monodromy_batch(Ea - s, prev).pow(ov.refine).matmul(acc)
    return acc


def prefix_transfer(E: float, recipe: PotentialRecipe, N: int) -> ScaledMatrix2:
    """Transfer over the first N sites of one period, 0 <= N <= period."""
    if not 0 <= N <= recipe.period:
        raise ValueError(f"N must lie in [0, {recipe.period}], got {N}")
    E = float(E)
    if not recipe.overlays:
        if N == recipe.period:
            return _monodromy_cached(E, recipe)
        return chain_transfer(E, recipe.materialize()[:N])
    prev = recipe.parent()
    ov = recipe.overlays[-1]
    unit = prev.period * ov.refine
    q, r = divmod(N, unit)
    acc = ScaledMatrix2.identity()
    full_copies = min(q, ov.copies)
    if full_copies:
        acc = _monodromy_cached(E, prev).pow(ov.refine * full_copies)
    for u in range(ov.copies, q):
        s = ov.shifts[u - ov.copies]
        acc = _monodromy_cached(E - s, prev).pow(ov.refine) @ acc
    if r:
        s = 0.0 if q < ov.copies else ov.shifts[q - ov.copies]
        q2, r2 = divmod(r, prev.period)
        part = ScaledMatrix2.identity()
        if q2:
            part = _monodromy_cached(E - s, prev).pow(q2)
        if r2:
            part = prefix_transfer(E - s, prev, r2) @ part
        acc = part @ acc
    return acc


def transfer_product(E: float, recipe: PotentialRecipe, N: int) -> ScaledMatrix2:
    """Transfer over N sites for arbitrary N >= 0, using periodicity."""
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    E = float(E)
    q, r = divmod(N, recipe.period)
    acc = ScaledMatrix2.identity()
    if q:
        acc = _monodromy_cached(E, recipe).pow(q)
    if r:
        acc = prefix_transfer(E, recipe, r) @ acc
    return acc


def discriminant(E: float, recipe: PotentialRecipe) -> float:
    """Trace of the monodromy, saturating to +-inf when it overflows."""
    return monodromy(E, recipe).trace_value()


def discriminant_batch(E, recipe: PotentialRecipe) -> np.ndarray:
    return monodromy_batch(E, recipe).trace_value()


def _lyap_from_logabs(logabs: float, period: int) -> float:
    """Lyapunov exponent from log |tr| of the monodromy."""
    if logabs <= _LN2:
        return 0.0
    if logabs > 50.0:
        return logabs / period
    half = math.exp(logabs) / 2.0
    return math.acosh(half) / period


def lyapunov_periodic(E: float, recipe: PotentialRecipe) -> float:
    """Lyapunov exponent of the periodic potential; zero on the spectrum."""
    _sign, logabs = monodromy(E, recipe).trace_signlog()
    return _lyap_from_logabs(logabs, recipe.period)


def lyapunov_periodic_batch(E, recipe: PotentialRecipe) -> np.ndarray:
    _sign, logabs = monodromy_batch(E, recipe).trace_signlog()
    p = recipe.period
    out = np.zeros_like(logabs)
    big = logabs > 50.0
    out[big] = logabs[big] / p
    mid = (~big) & (logabs > _LN2)
    out[mid] = np.arccosh(np.exp(logabs[mid]) / 2.0) / p
    return out


def finite_lyapunov(E: float, recipe: PotentialRecipe, N: int) -> float:
    """Finite-size exponent log ||A_N|| / N using the spectral norm."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return transfer_product(E, recipe, N).log_norm() / N


@dataclass(frozen=True)
class BlochVector:
    """Generalized eigenfunction with |psi| periodic over one period.

    The stored cycle psi(0..p-1) has unit Euclidean norm, so a window of
    w whole periods has norm exactly sqrt(w).  Values at arbitrary sites
    follow from psi(n + p) = multiplier * psi(n).
    """

    energy: float
    theta: float
    period: int
    cycle: np.ndarray

    @property
    def multiplier(self) -> complex:
        return cmath.exp(1j * self.theta)

    def value(self, n: int) -> complex:
        q, r = divmod(int(n), self.period)
        return self.cycle[r] * cmath.exp(1j * (self.theta * q))

    def window_norm(self, whole_periods: int) -> float:
        return math.sqrt(whole_periods)


def bloch_solution(E: float, recipe: PotentialRecipe) -> BlochVector:
    """Bloch solution at an energy inside the spectrum.

    Raises NotInSpectrumError when |tr| > 2 and LimperError when the
    monodromy norm is too large to resolve the eigenvector direction.
    """
    E = float(E)
    M = monodromy(E, recipe)
    tr = M.trace_value()
    if not abs(tr) <= 2.0:
        raise NotInSpectrumError(
            f"discriminant {tr} has modulus > 2 at E={E}"
        )
    if M.log > _BLOCH_LOG_LIMIT:
        raise LimperError(
            f"monodromy norm exp({M.log:.3g}) too large to resolve the "
            f"Bloch direction at E={E}"
        )
    p = recipe.period
    if p > 5_000_000:
        raise PeriodTooLargeError(
            f"period {p} too large to materialize a Bloch cycle"
        )
    theta = math.acos(min(1.0, max(-1.0, tr / 2.0)))
    lam_scaled = cmath.exp(1j * theta) * math.exp(-M.log)
    row1 = np.array([M.b, lam_scaled - M.a], dtype=np.complex128)
    row2 = np.array([lam_scaled - M.d, M.c], dtype=np.complex128)
    vec = row1 if np.linalg.norm(row1) >= np.linalg.norm(row2) else row2
    nrm = np.linalg.norm(vec)
    vec = np.array([1.0, 0.0], dtype=np.complex128) if nrm == 0.0 else vec / nrm
    # vec holds (psi(0), psi(-1)); step the recurrence forward from there
    cycle = np.empty(p, dtype=np.complex128)
    vals = recipe.values(0, p)
    cycle[0] = vec[0]
    if p > 1:
        cycle[1] = (E - vals[0]) * vec[0] - vec[1]
        for n in range(1, p - 1):
            cycle[n + 1] = (E - vals[n]) * cycle[n] - cycle[n - 1]
    cycle /= np.linalg.norm(cycle)
    return BlochVector(E, theta, p, cycle)
