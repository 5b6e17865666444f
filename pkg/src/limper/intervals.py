"""Open-interval families: density checks, subinterval picks, nesting.

A family at stage k collects the open intervals on which the stage-k
Lyapunov exponent vanishes.  Density of the family in [-4, 4] is the
quantity the staged construction certifies, and parent links record how
each interval arose from a shifted subinterval of the previous stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EmptyFamilyError

#: Coverage comparisons absorb float roundoff up to this absolute slack,
#: so endpoint ties conceived in decimal (e.g. 0.1 + 4 vs 4.1) still
#: count as covered.  Density targets in use sit ten orders above it.
COVER_TIE_TOL = 1e-12


@dataclass(frozen=True)
class OpenInterval:
    """Open interval (lo, hi) with lo < hi."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"interval ({self.lo}, {self.hi}) is empty")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def shifted(self, s: float) -> "OpenInterval":
        return OpenInterval(self.lo + s, self.hi + s)

    def contains_point(self, x: float) -> bool:
        return self.lo < x < self.hi

    def contains_interval(self, other: "OpenInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


@dataclass(frozen=True)
class IntervalFamily:
    """Stage-k interval collection with optional parent links.

    ``parent_links[i] = (parent_index, j)`` states that interval i of a
    stage-k family was carved out of its stage-(k-1) parent after
    shifting the parent's picked subinterval by j / 2^(k+1).
    """

    stage: int
    intervals: tuple[OpenInterval, ...]
    parent_links: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        if self.stage < 0:
            raise ValueError(f"stage must be >= 0, got {self.stage}")
        if self.parent_links is not None and len(self.parent_links) != len(
            self.intervals
        ):
            raise ValueError("parent_links must match intervals one to one")

    def __len__(self) -> int:
        return len(self.intervals)

    def to_jsonable(self) -> dict:
        return {
            "stage": self.stage,
            "intervals": [[iv.lo, iv.hi] for iv in self.intervals],
            "parent_links": None
            if self.parent_links is None
            else [list(link) for link in self.parent_links],
        }

    @staticmethod
    def from_jsonable(data: dict) -> "IntervalFamily":
        links = data.get("parent_links")
        return IntervalFamily(
            int(data["stage"]),
            tuple(OpenInterval(float(a), float(b)) for a, b in data["intervals"]),
            None if links is None else tuple((int(i), int(j)) for i, j in links),
        )


def is_eps_dense(family: IntervalFamily, eps: float, span: tuple[float, float] = (-4.0, 4.0)) -> bool:
    """Whether every closed eps-window centered in the span meets the family.

    For an interval (a, b), the centers E whose window [E-eps, E+eps]
    contains (a, b) form the closed interval [b-eps, a+eps], nonempty
    iff b-a <= 2*eps.  The family is eps-dense iff those closed center
    sets cover the span; the check is an exact interval-union sweep,
    with endpoint ties counting as covered.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    lo_span, hi_span = span
    windows = sorted(
        (iv.hi - eps, iv.lo + eps)
        for iv in family.intervals
        if iv.hi - eps <= iv.lo + eps
    )
    covered = lo_span
    for wlo, whi in windows:
        if wlo > covered + COVER_TIE_TOL:
            return False
        covered = max(covered, whi)
        if covered >= hi_span - COVER_TIE_TOL:
            return True
    return covered >= hi_span - COVER_TIE_TOL


def pick_subinterval(interval: OpenInterval, maxlen: float) -> OpenInterval:
    """Concentric subinterval of length 0.9 * min(|I|, maxlen).

    Strictly inside the input and strictly shorter than maxlen.  When
    the input is so short that the shrink vanishes in floating point,
    the tightest representable interval around the center is returned.
    """
    if maxlen <= 0:
        raise ValueError(f"maxlen must be > 0, got {maxlen}")
    length = 0.9 * min(interval.length, maxlen)
    c = interval.center
    lo, hi = c - length / 2.0, c + length / 2.0
    if not lo < hi:
        lo = math.nextafter(c, -math.inf)
        hi = math.nextafter(c, math.inf)
        lo, hi = max(lo, interval.lo), min(hi, interval.hi)
    return OpenInterval(lo, hi)


def min_length(family: IntervalFamily) -> float:
    """Length of the shortest interval in the family."""
    if not family.intervals:
        raise EmptyFamilyError("family has no intervals")
    return min(iv.length for iv in family.intervals)


def verify_nesting(child: IntervalFamily, parent: IntervalFamily) -> bool:
    """Check the two nesting properties between consecutive stages.

    Every parent interval must contain at least one child outright, and
    every linked child must sit inside the recomputed picked subinterval
    of its parent shifted by the recorded j / 2^(child.stage + 1).
    """
    if child.stage != parent.stage + 1:
        raise ValueError(
            f"child stage {child.stage} must be parent stage {parent.stage} + 1"
        )
    has_child = [False] * len(parent.intervals)
    for i, iv in enumerate(child.intervals):
        for pi, piv in enumerate(parent.intervals):
            if piv.contains_interval(iv):
                has_child[pi] = True
    if not all(has_child):
        return False
    if child.parent_links is None:
        return False
    maxlen = 2.0 ** -(child.stage + 1)
    denom = 2.0 ** (child.stage + 1)
    for iv, (pi, j) in zip(child.intervals, child.parent_links):
        if not 0 <= pi < len(parent.intervals):
            return False
        target = pick_subinterval(parent.intervals[pi], maxlen).shifted(j / denom)
        if not target.contains_interval(iv):
            return False
    return True
