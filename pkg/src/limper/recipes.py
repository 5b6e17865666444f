"""Hierarchical descriptions of periodic potentials.

A recipe is a base step potential given by (value, run length) pieces,
plus a stack of overlays.  Each overlay repeats the previous level
``refine`` times to form a unit, lays down ``copies`` unshifted units,
and then appends one unit per entry of ``shifts`` with that constant
added to the potential inside the unit.  The period therefore multiplies
by ``refine * (copies + len(shifts))`` per overlay, which lets deeply
nested potentials with astronomically long periods be evaluated site by
site in time proportional to the overlay depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class StepPiece:
    """One constant run of the base potential."""

    value: float
    length: int

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError(f"piece length must be >= 1, got {self.length}")


@dataclass(frozen=True)
class Overlay:
    """One refinement layer: unshifted copies followed by shifted blocks."""

    refine: int
    copies: int
    shifts: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.refine < 1:
            raise ValueError(f"refine must be >= 1, got {self.refine}")
        if self.copies < 0:
            raise ValueError(f"copies must be >= 0, got {self.copies}")
        if self.copies + len(self.shifts) < 1:
            raise ValueError("overlay must contribute at least one unit")

    @property
    def units(self) -> int:
        return self.copies + len(self.shifts)


@dataclass(frozen=True)
class PotentialRecipe:
    """Periodic potential built from a step base and overlay layers."""

    base: tuple[StepPiece, ...]
    overlays: tuple[Overlay, ...] = ()

    def __post_init__(self) -> None:
        if not self.base:
            raise ValueError("base must contain at least one piece")

    @cached_property
    def base_period(self) -> int:
        return sum(p.length for p in self.base)

    @cached_property
    def level_periods(self) -> tuple[int, ...]:
        """Periods after zero, one, ... all overlays are applied."""
        periods = [self.base_period]
        for ov in self.overlays:
            periods.append(periods[-1] * ov.refine * ov.units)
        return tuple(periods)

    @property
    def period(self) -> int:
        return self.level_periods[-1]

    @cached_property
    def _base_edges(self) -> tuple[int, ...]:
        edges = [0]
        for p in self.base:
            edges.append(edges[-1] + p.length)
        return tuple(edges)

    def parent(self) -> "PotentialRecipe":
        """Recipe with the top overlay removed."""
        if not self.overlays:
            raise ValueError("recipe has no overlays")
        return PotentialRecipe(self.base, self.overlays[:-1])

    def with_overlay(
        self, refine: int, copies: int, shifts: Sequence[float] = ()
    ) -> "PotentialRecipe":
        ov = Overlay(refine, copies, tuple(float(s) for s in shifts))
        return PotentialRecipe(self.base, self.overlays + (ov,))

    def value(self, n: int) -> float:
        """Potential value at site n, extended periodically to all of Z."""
        n = int(n) % self.period
        shift = 0.0
        periods = self.level_periods
        for k in range(len(self.overlays) - 1, -1, -1):
            ov = self.overlays[k]
            unit = periods[k] * ov.refine
            u, n = divmod(n, unit)
            if u >= ov.copies:
                shift += ov.shifts[u - ov.copies]
            n %= periods[k]
        edges = self._base_edges
        lo, hi = 0, len(self.base)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if n >= edges[mid]:
                lo = mid
            else:
                hi = mid
        return self.base[lo].value + shift

    def values(self, start: int, count: int) -> np.ndarray:
        """Window of ``count`` consecutive values beginning at ``start``."""
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        p = self.period
        if p <= 2 * count or p <= 65536:
            cycle = self.materialize()
            idx = (np.arange(start, start + count) % p).astype(np.intp)
            return cycle[idx]
        return np.array([self.value(start + i) for i in range(count)])

    def materialize(self) -> np.ndarray:
        """One full period as a dense array.  Refuses absurd periods."""
        if self.period > 50_000_000:
            raise ValueError(f"period {self.period} too large to materialize")
        cycle = np.repeat(
            [p.value for p in self.base], [p.length for p in self.base]
        ).astype(np.float64)
        for ov in self.overlays:
            unit = np.tile(cycle, ov.refine)
            parts = [np.tile(unit, ov.copies)] if ov.copies else []
            for s in ov.shifts:
                parts.append(unit + s)
            cycle = np.concatenate(parts)
        return cycle

    def sup_abs_bound(self) -> float:
        """Upper bound for sup |V|, exact when no overlays are present."""
        bound = max(abs(p.value) for p in self.base)
        for ov in self.overlays:
            bound += max((abs(s) for s in ov.shifts), default=0.0)
        return bound

    def to_jsonable(self) -> dict:
        return {
            "base": [[p.value, p.length] for p in self.base],
            "overlays": [
                {"refine": ov.refine, "copies": ov.copies, "shifts": list(ov.shifts)}
                for ov in self.overlays
            ],
        }

    @staticmethod
    def from_jsonable(data: dict) -> "PotentialRecipe":
        base = tuple(StepPiece(float(v), int(n)) for v, n in data["base"])
        overlays = tuple(
            Overlay(
                int(ov["refine"]),
                int(ov["copies"]),
                tuple(float(s) for s in ov["shifts"]),
            )
            for ov in data.get("overlays", ())
        )
        return PotentialRecipe(base, overlays)


def constant_potential(value: float, period: int = 1) -> PotentialRecipe:
    """Constant potential, optionally declared with a longer period."""
    return PotentialRecipe((StepPiece(float(value), int(period)),))


def step_potential(pairs: Iterable[tuple[float, int]]) -> PotentialRecipe:
    """Step potential from (value, run length) pairs."""
    return PotentialRecipe(tuple(StepPiece(float(v), int(n)) for v, n in pairs))


def from_values(values: Sequence[float]) -> PotentialRecipe:
    """Step potential matching one explicit period of values."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("values must be nonempty")
    pieces: list[StepPiece] = []
    run_value = float(vals[0])
    run_len = 1
    for v in vals[1:]:
        if float(v) == run_value:
            run_len += 1
        else:
            pieces.append(StepPiece(run_value, run_len))
            run_value = float(v)
            run_len = 1
    pieces.append(StepPiece(run_value, run_len))
    return PotentialRecipe(tuple(pieces))
