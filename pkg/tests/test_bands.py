"""Band structure, infima, density of states, and the Thouless integral."""

import math

import numpy as np
import pytest
from conftest import random_step_recipe

from limper.bands import (
    BandList,
    band_edges_exact,
    bottom_crossing,
    bulk_truncated_eigenvalues,
    dist_to_spectrum,
    hausdorff_bands_points,
    ids,
    in_spectrum,
    local_bands,
    spectrum_infimum,
    spectrum_measure,
    thouless_lyapunov,
    truncated_eigenvalues,
)
from limper.errors import PeriodTooLargeError
from limper.recipes import constant_potential, from_values
from limper.transfer import lyapunov_periodic

FREE = constant_potential(0.0)
SQRT8 = 2.0 * math.sqrt(2.0)


def test_free_spectrum_is_minus_two_two():
    bands = band_edges_exact(FREE)
    assert len(bands) == 1
    np.testing.assert_allclose(bands.edges(), [-2.0, 2.0], atol=1e-10)


def test_period_two_bands_closed_form():
    # values [4, 0]: tr(E) = E^2 - 4E - 2, bands from |tr| = 2
    bands = band_edges_exact(from_values([4.0, 0.0]))
    np.testing.assert_allclose(
        bands.edges(), [2.0 - SQRT8, 0.0, 4.0, 2.0 + SQRT8], atol=1e-10
    )


def test_constant_potential_shifts_the_band():
    bands = band_edges_exact(constant_potential(2.2))
    np.testing.assert_allclose(bands.edges(), [0.2, 4.2], atol=1e-10)


def test_band_edges_reject_huge_periods():
    with pytest.raises(PeriodTooLargeError):
        band_edges_exact(constant_potential(0.0, period=5000))


def test_band_list_queries():
    bands = BandList(((0.0, 1.0), (2.0, 3.0)))
    assert bands.contains(0.5) and not bands.contains(1.5)
    assert bands.distance(1.4) == pytest.approx(0.4)
    assert bands.distance(2.5) == 0.0
    assert spectrum_measure(bands) == pytest.approx(2.0)
    clipped = bands.clip(0.5, 2.5)
    assert clipped.bands == ((0.5, 1.0), (2.0, 2.5))


def test_in_spectrum_matches_edges():
    r = from_values([4.0, 0.0])
    assert in_spectrum(-0.5, r)
    assert not in_spectrum(1.0, r)
    assert in_spectrum(4.5, r)


def test_spectrum_measure_bounded_by_four():
    rng = np.random.default_rng(15)
    for _ in range(10):
        bands = band_edges_exact(random_step_recipe(rng))
        assert spectrum_measure(bands) <= 4.0 + 1e-9


def test_bands_match_truncation_cloud():
    rng = np.random.default_rng(16)
    r = random_step_recipe(rng)
    bands = band_edges_exact(r)
    bulk, surface = bulk_truncated_eigenvalues(r, 4096, bands)
    assert hausdorff_bands_points(bands, bulk) <= 2e-3
    # a hard wall keeps at most two localized modes per gap closure
    assert surface.size <= 2 * len(bands)


def test_truncation_wall_creates_gap_modes():
    # raw Dirichlet cloud carries boundary-localized gap eigenvalues;
    # the bulk/surface split must find and certify them
    rng = np.random.default_rng(16)
    r = random_step_recipe(rng)
    bands = band_edges_exact(r)
    raw = truncated_eigenvalues(r, 4096)
    assert hausdorff_bands_points(bands, raw) > 2e-3
    bulk, surface = bulk_truncated_eigenvalues(r, 4096, bands)
    assert surface.size >= 1
    assert bulk.size + surface.size == raw.size
    for x in surface:
        assert bands.distance(float(x)) > 1e-3


def test_truncated_eigenvalues_cap():
    with pytest.raises(ValueError):
        truncated_eigenvalues(FREE, 9000)


def test_local_bands_refines_window():
    found = local_bands(from_values([4.0, 0.0]), (-1.5, 0.5))
    assert len(found.bands) == 1
    np.testing.assert_allclose(
        found.bands.bands[0], (2.0 - SQRT8, 0.0), atol=1e-9
    )
    assert found.slivers == ()


def test_local_bands_pins_thin_bands_as_slivers():
    # 600-fold stretched constant potential: bands near the bottom are
    # far narrower than the default grid, so sign flips must catch them
    r = constant_potential(2.2).with_overlay(600, 1)
    found = local_bands(r, (0.2, 0.2005), resolution=1e-4)
    assert found.bands.bands or found.slivers
    for sliver in found.slivers:
        lo, hi = sliver.bracket
        assert 0.2 <= lo <= hi <= 0.2005


def test_dist_to_spectrum_agrees_with_edges():
    r = from_values([4.0, 0.0])
    got = dist_to_spectrum(1.0, r, search_radius=3.0)
    assert got == pytest.approx(1.0, abs=1e-9)


def test_bottom_crossing_pins_infimum():
    lo, hi = bottom_crossing(from_values([4.0, 0.0]))
    want = 2.0 - SQRT8
    assert lo <= want <= hi or abs(hi - want) < 1e-9
    assert hi - lo < 1e-9
    assert spectrum_infimum(FREE) == pytest.approx(-2.0, abs=1e-9)


def test_bottom_crossing_validated_against_thin_forest():
    # long lowered run: the lowest bands are a forest of exponentially
    # thin resonances; the validated sweep may not stop on a higher one.
    # Oracle: lowest Dirichlet eigenvalue of three periods, a lower
    # bound within (pi / site count)^2 of the true infimum.
    import scipy.linalg

    r = constant_potential(2.2).with_overlay(500, 1, (-0.08,))
    lo, hi = bottom_crossing(r)
    vals = np.concatenate([r.materialize()] * 3)
    oracle = scipy.linalg.eigh_tridiagonal(
        vals, np.ones(vals.size - 1), eigvals_only=True,
        select="i", select_range=(0, 0),
    )[0]
    assert hi >= oracle - 1e-12
    assert hi - oracle < 2.0 * (math.pi / vals.size) ** 2
    assert hi - lo < 1e-9


def test_ids_endpoints_and_midband():
    assert ids(-3.0, FREE) == 0.0
    assert ids(3.0, FREE) == 1.0
    # free integrated density of states: arccos(-E/2) / pi
    np.testing.assert_allclose(ids(0.0, FREE), 0.5, atol=1e-9)
    np.testing.assert_allclose(ids(1.0, FREE), math.acos(-0.5) / math.pi, atol=1e-6)


def test_thouless_matches_direct_exponent():
    rng = np.random.default_rng(17)
    for _ in range(3):
        r = random_step_recipe(rng, max_period=8)
        bands = band_edges_exact(r)
        for E in (bands.edges()[0] - 1.5, bands.edges()[-1] + 2.0):
            got = thouless_lyapunov(float(E), r)
            want = lyapunov_periodic(float(E), r)
            assert abs(got - want) <= 1e-4
