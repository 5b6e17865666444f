"""Band structure of periodic discrete Schrodinger operators.

Spectra are unions of closed bands, the energies where the monodromy
trace has modulus at most 2.  For moderate periods all band edges come
from the periodic and antiperiodic eigenproblems; for the huge periods
produced by nested recipes, bands are located inside a window by
adaptive sampling of the trace with bisection refinement.  Bands too
thin to certify at float resolution are reported as sliver metadata
rather than silently dropped or guessed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import EmptyFamilyError, PeriodTooLargeError
from .recipes import PotentialRecipe
from .transfer import discriminant, monodromy, monodromy_batch

_LN2 = math.log(2.0)

#: Period cap for the dense periodic/antiperiodic eigenproblems.
BAND_EDGE_CAP = 4096

#: Size cap for the tridiagonal truncation oracle.
TRUNCATION_CAP = 8192

#: Bands narrower than this are reported as slivers, not bands.
WIDTH_FLOOR = 1e-12

#: Point budget for the dense sweep that validates a bottom crossing.
VALIDATION_CAP = 20_000_000

#: Grid chunk size for batched trace evaluation during validation.
_VALIDATION_CHUNK = 2_000_000


@dataclass(frozen=True)
class BandList:
    """Sorted disjoint closed bands [(alpha_i, beta_i)]."""

    bands: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        prev_hi = -math.inf
        for lo, hi in self.bands:
            if not lo < hi:
                raise ValueError(f"band ({lo}, {hi}) is not a proper interval")
            if not prev_hi < lo:
                raise ValueError(f"band ({lo}, {hi}) overlaps its predecessor")
            prev_hi = hi

    def __len__(self) -> int:
        return len(self.bands)

    def measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.bands))

    def edges(self) -> np.ndarray:
        return np.array([e for band in self.bands for e in band])

    def contains(self, E: float) -> bool:
        return any(lo <= E <= hi for lo, hi in self.bands)

    def distance(self, E: float) -> float:
        """Distance from E to the band union; inf for an empty list."""
        best = math.inf
        for lo, hi in self.bands:
            if lo <= E <= hi:
                return 0.0
            best = min(best, abs(E - lo), abs(E - hi))
        return best

    def clip(self, lo: float, hi: float) -> "BandList":
        """Intersection with the closed window [lo, hi]."""
        out = []
        for a, b in self.bands:
            a2, b2 = max(a, lo), min(b, hi)
            if a2 < b2:
                out.append((a2, b2))
        return BandList(tuple(out))


def _wrapped_eigenvalues(vals: np.ndarray, wrap: float) -> np.ndarray:
    p = vals.shape[0]
    H = np.diag(vals.astype(np.float64))
    idx = np.arange(p - 1)
    H[idx, idx + 1] = 1.0
    H[idx + 1, idx] = 1.0
    # += handles p <= 2 where the wrap entry coincides with a neighbor entry
    H[0, p - 1] += wrap
    H[p - 1, 0] += wrap
    return np.linalg.eigvalsh(H)


@lru_cache(maxsize=256)
def _phase_candidates(recipe: PotentialRecipe) -> np.ndarray:
    """Sorted 2p eigenvalues of the periodic and antiperiodic problems.

    Consecutive pairs (c[2i], c[2i+1]) are the phase bands; the trace is
    monotone on each, running from +2 to -2 on even-indexed bands and
    back on odd-indexed ones.
    """
    p = recipe.period
    if p > BAND_EDGE_CAP:
        raise PeriodTooLargeError(
            f"period {p} exceeds the eigensolver cap {BAND_EDGE_CAP}; "
            f"use local_bands for a window of interest"
        )
    vals = recipe.materialize()
    cands = np.concatenate(
        [_wrapped_eigenvalues(vals, 1.0), _wrapped_eigenvalues(vals, -1.0)]
    )
    cands.sort()
    out = cands.copy()
    out.setflags(write=False)
    return out


def band_edges_exact(recipe: PotentialRecipe) -> BandList:
    """All band edges from the periodic/antiperiodic eigenproblems.

    Adjacent phase bands separated by a gap below 1e-6 are merged when
    the midpoint of the gap still lies in the spectrum; this removes
    spurious splits at closed gaps.
    """
    cands = _phase_candidates(recipe)
    pairs = [(float(cands[2 * i]), float(cands[2 * i + 1])) for i in range(len(cands) // 2)]
    merged: list[list[float]] = []
    for lo, hi in pairs:
        if merged and lo - merged[-1][1] <= 1e-6:
            mid = 0.5 * (merged[-1][1] + lo)
            if abs(discriminant(mid, recipe)) <= 2.0:
                merged[-1][1] = max(merged[-1][1], hi)
                continue
            if lo <= merged[-1][1]:
                # eigensolver noise only; keep bands strictly disjoint
                merged[-1][1] = max(merged[-1][1], hi)
                continue
        merged.append([lo, hi])
    return BandList(tuple((lo, hi) for lo, hi in merged if lo < hi))


def in_spectrum(E: float, recipe: PotentialRecipe) -> bool:
    """Whether |tr| <= 2, decided in the log domain (overflow safe)."""
    _sign, logabs = monodromy(float(E), recipe).trace_signlog()
    return bool(logabs <= _LN2)


@dataclass(frozen=True)
class Sliver:
    """A certified-thin spectral feature below the band width floor.

    ``center`` is a bisected zero of the trace.  When ``certified`` is
    true the trace at the center float has modulus <= 2, so the center
    itself lies in the spectrum; otherwise no representable float was
    found inside the band and ``trace_logabs`` records log |tr| at the
    best candidate.
    """

    center: float
    bracket: tuple[float, float]
    certified: bool
    trace_logabs: float


@dataclass(frozen=True)
class LocalBands:
    """Bands found in a window, plus slivers too thin to resolve."""

    bands: BandList
    slivers: tuple[Sliver, ...]
    window: tuple[float, float]
    floor: float


def _logabs_grid(recipe: PotentialRecipe, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sign, logabs = monodromy_batch(xs, recipe).trace_signlog()
    return sign, logabs


def _bisect_scalar(recipe, lo, hi, want_inside_hi, iters=90):
    """Refine a bracket of the |tr| = 2 crossing; inside-ness flips inside."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if in_spectrum(mid, recipe) == want_inside_hi:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _bisect_trace_zeros(recipe, lo, hi, sign_lo, iters=200):
    """Pin sign changes of the trace down to adjacent floats, in batch."""
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        stuck = (mid <= lo) | (mid >= hi)
        if stuck.all():
            break
        s, _la = monodromy_batch(mid, recipe).trace_signlog()
        same = (s == sign_lo) & ~stuck
        lo = np.where(same, mid, lo)
        hi = np.where(~same & ~stuck, mid, hi)
    return lo, hi


def local_bands(
    recipe: PotentialRecipe,
    window: tuple[float, float],
    resolution: float | None = None,
    floor: float = WIDTH_FLOOR,
    refine_rounds: int = 2,
    max_points: int = 200_000,
) -> LocalBands:
    """Bands of the spectrum inside an open window, clipped to it.

    Samples the trace on a grid, refines adaptively near the spectrum,
    bisects |tr| = 2 edges, and pins trace zeros hiding between two
    off-spectrum samples of opposite trace sign.  Pinned zeros whose
    band is narrower than ``floor`` become slivers; a sliver is
    certified when the trace at its center float has modulus <= 2.
    """
    a, b = float(window[0]), float(window[1])
    if not a < b:
        raise ValueError(f"window ({a}, {b}) is empty")
    step0 = resolution if resolution is not None else min((b - a) / 64.0, 1.0 / 16.0)
    n0 = max(4, int(math.ceil((b - a) / step0)) + 1)
    xs = np.linspace(a, b, n0)

    for _round in range(refine_rounds):
        sign, la = _logabs_grid(recipe, xs)
        inside = la <= _LN2
        flip = sign[:-1] * sign[1:] < 0
        suspicious = (
            inside[:-1]
            | inside[1:]
            | flip
            | (np.minimum(la[:-1], la[1:]) < _LN2 + 5.0)
        )
        if not suspicious.any() or xs.shape[0] > max_points:
            break
        extra = []
        for i in np.nonzero(suspicious)[0]:
            extra.append(np.linspace(xs[i], xs[i + 1], 9)[1:-1])
        xs = np.unique(np.concatenate([xs] + extra))

    sign, la = _logabs_grid(recipe, xs)
    inside = la <= _LN2

    flip_idx = np.nonzero(
        ~inside[:-1] & ~inside[1:] & (sign[:-1] * sign[1:] < 0)
    )[0]
    zero_info: dict[int, tuple[float, float, float, float]] = {}
    if flip_idx.size:
        zlo, zhi = _bisect_trace_zeros(
            recipe, xs[flip_idx], xs[flip_idx + 1], sign[flip_idx]
        )
        _s_lo, la_lo = monodromy_batch(zlo, recipe).trace_signlog()
        _s_hi, la_hi = monodromy_batch(zhi, recipe).trace_signlog()
        for n, i in enumerate(flip_idx):
            if la_lo[n] <= la_hi[n]:
                zero_info[int(i)] = (float(zlo[n]), float(zhi[n]), float(zlo[n]), float(la_lo[n]))
            else:
                zero_info[int(i)] = (float(zlo[n]), float(zhi[n]), float(zhi[n]), float(la_hi[n]))

    bands: list[tuple[float, float]] = []
    slivers: list[Sliver] = []
    open_lo: float | None = float(xs[0]) if inside[0] else None
    for i in range(xs.shape[0] - 1):
        li, ri = bool(inside[i]), bool(inside[i + 1])
        if li and not ri:
            lo, hi = _bisect_scalar(recipe, float(xs[i]), float(xs[i + 1]), False)
            assert open_lo is not None
            bands.append((open_lo, lo))
            open_lo = None
        elif not li and ri:
            lo, hi = _bisect_scalar(recipe, float(xs[i]), float(xs[i + 1]), True)
            open_lo = hi
        elif i in zero_info:
            zlo, zhi, center, la_c = zero_info[i]
            if la_c <= _LN2:
                elo, _ = _bisect_scalar(recipe, float(xs[i]), center, True)
                _, ehi = _bisect_scalar(recipe, center, float(xs[i + 1]), False)
                if ehi - elo >= floor:
                    bands.append((elo, ehi))
                else:
                    slivers.append(Sliver(center, (zlo, zhi), True, la_c))
            else:
                slivers.append(Sliver(center, (zlo, zhi), False, la_c))
    if open_lo is not None:
        bands.append((open_lo, float(xs[-1])))

    kept: list[tuple[float, float]] = []
    for lo, hi in bands:
        if hi - lo < floor:
            center = 0.5 * (lo + hi)
            _s, la_c = monodromy(center, recipe).trace_signlog()
            slivers.append(Sliver(center, (lo, hi), bool(la_c <= _LN2), float(la_c)))
            continue
        if kept and lo <= kept[-1][1]:
            kept[-1] = (kept[-1][0], max(kept[-1][1], hi))
        else:
            kept.append((lo, hi))
    slivers.sort(key=lambda s: s.center)
    return LocalBands(BandList(tuple(kept)), tuple(slivers), (a, b), floor)


def dist_to_spectrum(E: float, recipe: PotentialRecipe, search_radius: float) -> float:
    """Distance to the nearest band within the radius; inf if none found."""
    if search_radius <= 0:
        raise ValueError(f"search_radius must be > 0, got {search_radius}")
    E = float(E)
    if recipe.period <= BAND_EDGE_CAP:
        d = band_edges_exact(recipe).distance(E)
        return d if d <= search_radius else math.inf
    found = local_bands(recipe, (E - search_radius, E + search_radius))
    d = found.bands.distance(E)
    for sliver in found.slivers:
        if sliver.certified:
            d = min(d, abs(E - sliver.center))
    return d if d <= search_radius else math.inf


def spectrum_measure(bands: BandList) -> float:
    """Total length of the band union."""
    return bands.measure()


def _below_bottom(recipe: PotentialRecipe, E: float) -> bool:
    """Whether tr > 2, the signature of energies below the whole spectrum."""
    s, la = monodromy(E, recipe).trace_signlog()
    return bool(s > 0 and la > _LN2)


def validation_points(recipe: PotentialRecipe, span: float) -> float:
    """Grid size the dense validation sweep would need over a span."""
    step = (math.pi / recipe.period) ** 2
    return span / step


def _first_violation(sign: np.ndarray, la: np.ndarray, check_first: bool) -> int | None:
    """Index of the first grid point breaking the below-spectrum pattern.

    Below the lowest band the trace is positive, above 2, and strictly
    decreasing in E.  A sign flip or a drop of |tr| below 2 means a band
    was crossed; a rise of log|tr| means a band (or an even cluster of
    bands) sits inside the preceding grid interval even if the sign and
    magnitude tests at the grid points themselves pass.
    """
    bad = ~((sign > 0) & (la > _LN2))
    rose = np.empty(bad.shape, dtype=bool)
    rose[0] = False
    rose[1:] = np.diff(la) >= 0.0
    viol = bad | rose
    if not check_first:
        viol[0] = False
    idx = np.nonzero(viol)[0]
    return int(idx[0]) if idx.size else None


def _refine_lowest(recipe: PotentialRecipe, a: float, b: float) -> tuple[float, float]:
    """Shrink (a, b] around the first trace feature to adjacent floats.

    Each round re-grids the bracket; sign flips are pinned by bisection,
    while sign-preserving dips (even clusters thinner than float
    spacing) are pinned at the grid minimum of log|tr|.
    """
    for _ in range(12):
        xs = np.linspace(a, b, 4097)
        if xs[1] <= xs[0]:
            break
        sign, la = _logabs_grid(recipe, xs)
        flips = np.nonzero(sign[1:] != sign[0])[0]
        if flips.size:
            j = int(flips[0]) + 1
            lo, hi = float(xs[j - 1]), float(xs[j])
            for _ in range(120):
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                s, _la = monodromy(mid, recipe).trace_signlog()
                if s == sign[0]:
                    lo = mid
                else:
                    hi = mid
            return lo, hi
        j = _first_violation(sign, la, check_first=False)
        if j is None:
            j = int(np.argmin(la))
            if j == 0:
                return float(xs[0]), float(xs[1])
        a, b = float(xs[max(j - 1, 0)]), float(xs[min(j + 1, xs.size - 1)])
    return a, b


def _validated_bracket(
    recipe: PotentialRecipe, lb: float, lo: float, hi: float
) -> tuple[float, float]:
    """Dense sweep of [lb, lo] for bands the bisection skipped over.

    The lowest levels of a width-w well under unit hopping are spaced by
    at least about 3 (pi / (w + 1))^2, so a grid at (pi / period)^2
    spacing holds at most one band per interval and every band shows up
    as a sign flip, a |tr| <= 2 point, or a local rise of log|tr|.  The
    sweep is skipped when the required grid exceeds the point budget;
    even clusters packed tighter than the grid (only possible for
    several identical deepest wells per period) can still evade it.
    """
    span = lo - lb
    if not math.isfinite(span) or span <= 0.0:
        return lo, hi
    need = validation_points(recipe, span)
    if need > VALIDATION_CAP:
        return lo, hi
    n = max(int(need) + 2, 2)
    offset = 0
    prev_sign = None
    prev_la = None
    xs_all = np.linspace(lb, lo, n)
    while offset < n:
        stop = min(offset + _VALIDATION_CHUNK, n)
        xs = xs_all[offset:stop]
        sign, la = _logabs_grid(recipe, xs)
        if prev_sign is not None:
            sign = np.concatenate(([prev_sign], sign))
            la = np.concatenate(([prev_la], la))
        j = _first_violation(sign, la, check_first=(offset == 0))
        if j is not None:
            base = offset if prev_sign is None else offset - 1
            k = base + j
            a = float(xs_all[max(k - 2, 0)])
            b = float(xs_all[min(k, n - 1)])
            return _refine_lowest(recipe, a, b)
        prev_sign = sign[-1]
        prev_la = la[-1]
        offset = stop
    return lo, hi


def bottom_crossing(
    recipe: PotentialRecipe,
    lower_bound: float | None = None,
    base_gap: float = 1e-12,
    verify_points: int = 2048,
) -> tuple[float, float]:
    """Bracket the lowest |tr| = 2 crossing down to adjacent floats.

    Below the entire spectrum the trace stays above 2, so the leftmost
    downward crossing of 2 is the spectral infimum regardless of how
    thin the lowest band is.  The scan climbs geometrically from the
    lower bound, bisects the first failure of tr > 2, then re-verifies
    tr > 2 on a fine grid below the candidate and restarts lower if the
    verification finds an earlier failure.

    Bisection alone can skip over thin bands, because the tr > 2
    predicate is not monotone across a forest of them.  When the point
    budget allows, a final sweep at (pi / period)^2 spacing walks the
    whole range below the candidate and moves the bracket down to the
    earliest band-like feature it finds; see validation_points for the
    budget arithmetic.  Above the budget the candidate is returned as
    found, so callers with astronomically long periods need an
    independent bound on the infimum.
    """
    lb = float(lower_bound) if lower_bound is not None else -2.0 - recipe.sup_abs_bound()
    if not _below_bottom(recipe, lb):
        raise ValueError(f"lower bound {lb} is not strictly below the spectrum")
    hi = None
    scale = max(abs(lb), 1.0)
    for i in range(200):
        x = lb + base_gap * scale * 4.0**i
        if not _below_bottom(recipe, x):
            hi = x
            break
    if hi is None:
        raise ValueError("no spectrum found above the lower bound")
    lo = lb
    while True:
        for _ in range(300):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _below_bottom(recipe, mid):
                lo = mid
            else:
                hi = mid
        grid = np.linspace(lb, lo, verify_points)
        sign, la = _logabs_grid(recipe, grid)
        bad = ~((sign > 0) & (la > _LN2))
        if not bad.any():
            break
        hi = float(grid[np.nonzero(bad)[0][0]])
        lo = lb
    return _validated_bracket(recipe, lb, lo, hi)


def spectrum_infimum(recipe: PotentialRecipe, lower_bound: float | None = None) -> float:
    """Smallest spectral energy.

    Uses exact band edges when the period permits, otherwise locates the
    leftmost trace crossing by a geometric scan from a rigorous lower
    bound.
    """
    if recipe.period <= BAND_EDGE_CAP and lower_bound is None:
        return band_edges_exact(recipe).bands[0][0]
    lo, hi = bottom_crossing(recipe, lower_bound)
    return hi


def ids(E: float, recipe: PotentialRecipe) -> float:
    """Integrated density of states via phase counting."""
    E = float(E)
    cands = _phase_candidates(recipe)
    p = recipe.period
    if E < cands[0]:
        return 0.0
    if E >= cands[-1]:
        return 1.0
    i = int(np.searchsorted(cands, E, side="right")) - 1
    pair = i // 2
    if i % 2 == 1:
        return (pair + 1) / p
    # tr ~ E^p at -inf, so the first band's trace run starts at (-1)^p * 2
    orient = 1.0 if (pair + p) % 2 == 0 else -1.0
    tr = discriminant(E, recipe)
    x = min(1.0, max(-1.0, orient * tr / 2.0))
    return (pair + math.acos(x) / math.pi) / p


@lru_cache(maxsize=64)
def _thouless_table(recipe: PotentialRecipe, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-band energies at Gauss-Legendre phase nodes, plus weights."""
    cands = _phase_candidates(recipe)
    p = recipe.period
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = math.pi * (x + 1.0) / 2.0
    weights = w * math.pi / 2.0
    orient = np.where((np.arange(p) + p) % 2 == 0, 1.0, -1.0)
    targets = orient[:, None] * 2.0 * np.cos(theta)[None, :]
    lo = np.repeat(cands[0::2], nodes).reshape(p, nodes).astype(np.float64)
    hi = np.repeat(cands[1::2], nodes).reshape(p, nodes).astype(np.float64)
    lo_f, hi_f = lo.ravel(), hi.ravel()
    tg = targets.ravel()
    orient_f = np.repeat(orient, nodes)
    # orient * tr decreases from +2 to -2 across each phase band
    for _ in range(90):
        mid = 0.5 * (lo_f + hi_f)
        stuck = (mid <= lo_f) | (mid >= hi_f)
        if stuck.all():
            break
        _s, la = monodromy_batch(mid, recipe).trace_signlog()
        tr = np.where(_s == 0, 0.0, _s * np.exp(np.minimum(la, 700.0)))
        above = orient_f * tr >= tg
        lo_f = np.where(above & ~stuck, mid, lo_f)
        hi_f = np.where(~above & ~stuck, mid, hi_f)
    t_nodes = 0.5 * (lo_f + hi_f)
    t_nodes.setflags(write=False)
    weights.setflags(write=False)
    return t_nodes, weights


def thouless_lyapunov(E: float, recipe: PotentialRecipe, nodes: int = 64) -> float:
    """Lyapunov exponent from log |t - E| integrated against the IDS.

    The integral over each band is taken in the phase variable, which
    absorbs the inverse-square-root edge singularities of dN.
    """
    E = float(E)
    t_nodes, weights = _thouless_table(recipe, nodes)
    p = recipe.period
    gaps = np.maximum(np.abs(t_nodes - E), 1e-300)
    vals = np.log(gaps).reshape(p, nodes)
    return float((vals @ weights).sum() / (math.pi * p))


def truncated_eigenvalues(recipe: PotentialRecipe, size: int) -> np.ndarray:
    """Eigenvalues of the size x size restriction with Dirichlet ends."""
    if not 1 <= size <= TRUNCATION_CAP:
        raise ValueError(f"size must lie in [1, {TRUNCATION_CAP}], got {size}")
    diag = recipe.values(0, size)
    if size == 1:
        return diag.copy()
    off = np.ones(size - 1)
    return scipy.linalg.eigh_tridiagonal(diag, off, eigvals_only=True)


def bulk_truncated_eigenvalues(
    recipe: PotentialRecipe,
    size: int,
    bands: BandList,
    min_dist: float = 1e-3,
    edge_width: int = 256,
    edge_mass: float = 0.9,
) -> tuple[np.ndarray, np.ndarray]:
    """Dirichlet eigenvalues with boundary-localized gap modes split off.

    A hard truncation wall keeps up to two eigenvalues per spectral gap
    at every size, so the raw cloud never Hausdorff-converges to the
    band union.  Eigenvalues at least min_dist from the given bands are
    examined: when at least edge_mass of the eigenvector weight lies
    within edge_width sites of a wall, the eigenvalue is split off as a
    surface mode.  Returns (bulk, surface).  Far eigenvalues that fail
    the localization test stay in bulk, so a genuine band disagreement
    is never masked; the bands argument only preselects which
    eigenvectors are worth examining.
    """
    vals = truncated_eigenvalues(recipe, size)
    if size < 2 * edge_width + 2 or len(bands) == 0:
        return vals, np.empty(0)
    far = [i for i, x in enumerate(vals) if bands.distance(float(x)) > min_dist]
    if not far:
        return vals, np.empty(0)
    diag = recipe.values(0, size)
    off = np.ones(size - 1)
    surface = np.zeros(vals.size, dtype=bool)
    for i in far:
        _w, vec = scipy.linalg.eigh_tridiagonal(
            diag, off, select="i", select_range=(i, i)
        )
        v = vec[:, 0]
        head = float(v[:edge_width] @ v[:edge_width])
        tail = float(v[-edge_width:] @ v[-edge_width:])
        if head + tail >= edge_mass:
            surface[i] = True
    return vals[~surface], vals[surface]


def hausdorff_bands_points(bands: BandList, points: np.ndarray) -> float:
    """Hausdorff distance between a band union and a finite energy set."""
    pts = np.sort(np.asarray(points, dtype=np.float64))
    if len(bands) == 0 or pts.size == 0:
        return math.inf
    d_pts = max(bands.distance(float(x)) for x in pts)
    d_bands = 0.0
    for lo, hi in bands.bands:
        # sup over [lo, hi] of dist(., pts) is attained at an endpoint or
        # at a midpoint of consecutive points clipped to the band
        cand = [lo, hi]
        i0 = np.searchsorted(pts, lo)
        i1 = np.searchsorted(pts, hi)
        for j in range(max(0, i0 - 1), min(pts.size - 1, i1 + 1)):
            m = 0.5 * (pts[j] + pts[j + 1])
            if lo <= m <= hi:
                cand.append(float(m))
        for x in cand:
            d_bands = max(d_bands, float(np.min(np.abs(pts - x))))
    return max(d_pts, d_bands)
