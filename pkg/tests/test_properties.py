"""Structural invariants checked on randomized inputs."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from limper.bands import band_edges_exact, ids
from limper.chain import chain_transfer
from limper.intervals import IntervalFamily, OpenInterval, is_eps_dense
from limper.recipes import from_values
from limper.transfer import bloch_solution, monodromy, transfer_product


def dense(m):
    """Materialized 2x2 array of a scaled matrix (bounded logs only)."""
    return m.entries() * math.exp(m.log)


step_values = st.lists(
    st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, width=32),
    min_size=1,
    max_size=8,
)


@settings(max_examples=80, deadline=None)
@given(
    values=step_values,
    energy=st.floats(min_value=-4.0, max_value=4.0, allow_nan=False, width=32),
    total=st.integers(min_value=0, max_value=60),
    data=st.data(),
)
def test_transfer_cocycle_on_random_splits(values, energy, total, data):
    # A over N+M sites factors as (A over the last N, started at M) * (A over M)
    split = data.draw(st.integers(min_value=0, max_value=total), label="split")
    rec = from_values(values)
    whole = dense(transfer_product(energy, rec, total))
    tail_values = [rec.value(n) for n in range(split, total)]
    left = chain_transfer(energy, np.asarray(tail_values, dtype=float))
    right = transfer_product(energy, rec, split)
    recombined = dense(left @ right)
    scale = max(float(np.abs(whole).max()), 1.0)
    assert float(np.abs(recombined - whole).max()) <= 1e-9 * scale


@settings(max_examples=100, deadline=None)
@given(
    values=step_values,
    band_pick=st.integers(min_value=0, max_value=64),
    position=st.floats(min_value=0.25, max_value=0.75),
    power=st.integers(min_value=1, max_value=500),
)
def test_products_stay_unimodular_while_bounded(values, band_pick, position, power):
    # one-step matrices have det 1, so any product does; the residual is
    # only resolvable while the product stays bounded (elliptic energies)
    rec = from_values(values)
    bands = band_edges_exact(rec).bands
    lo, hi = bands[band_pick % len(bands)]
    m = monodromy(lo + position * (hi - lo), rec).pow(power)
    assume(m.log_norm() < 30.0)
    assert m.det_residual() <= 1e-4


def test_bloch_window_norm_ignores_the_offset():
    rec = from_values(np.random.default_rng(7).uniform(-1.5, 1.5, size=6))
    bands = band_edges_exact(rec).bands
    whole_periods = 3
    for i in range(20):
        lo, hi = bands[i % len(bands)]
        energy = lo + (0.2 + 0.6 * i / 19.0) * (hi - lo)
        bv = bloch_solution(energy, rec)
        expected = bv.window_norm(whole_periods)
        assert expected == math.sqrt(whole_periods)
        for offset in range(10):
            total = sum(
                abs(bv.value(offset + n)) ** 2
                for n in range(whole_periods * rec.period)
            )
            # |psi| is periodic, so every whole-period window weighs the same
            assert math.sqrt(total) == pytest.approx(expected, abs=1e-9)


interval_tuples = st.lists(
    st.tuples(
        st.floats(min_value=-4.0, max_value=4.0, allow_nan=False),
        st.floats(min_value=1e-4, max_value=2.0, allow_nan=False),
    ),
    min_size=0,
    max_size=8,
).map(lambda pairs: tuple(OpenInterval(lo, lo + w) for lo, w in pairs))


@settings(max_examples=150, deadline=None)
@given(
    intervals=interval_tuples,
    eps_a=st.floats(min_value=1e-3, max_value=8.0, allow_nan=False),
    eps_b=st.floats(min_value=1e-3, max_value=8.0, allow_nan=False),
    extra_lo=st.floats(min_value=-4.0, max_value=4.0, allow_nan=False),
    extra_w=st.floats(min_value=1e-4, max_value=2.0, allow_nan=False),
)
def test_eps_density_is_monotone(intervals, eps_a, eps_b, extra_lo, extra_w):
    family = IntervalFamily(0, intervals, None)
    eps_small, eps_large = sorted((eps_a, eps_b))
    # widening the window never destroys density
    if is_eps_dense(family, eps_small):
        assert is_eps_dense(family, eps_large)
    # adding an interval never destroys density
    grown = IntervalFamily(
        0, intervals + (OpenInterval(extra_lo, extra_lo + extra_w),), None
    )
    for eps in (eps_small, eps_large):
        if is_eps_dense(family, eps):
            assert is_eps_dense(grown, eps)


def test_ids_is_monotone_on_ordered_pairs():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(4):
        rec = from_values(rng.uniform(-3.0, 3.0, size=int(rng.integers(1, 9))))
        for _ in range(50):
            e1, e2 = np.sort(rng.uniform(-5.5, 6.5, size=2))
            assert ids(e1, rec) <= ids(e2, rec) + 1e-12
            checked += 1
        # the counting function saturates outside the spectrum
        assert ids(-10.0, rec) == 0.0
        assert ids(10.0, rec) == 1.0
    assert checked == 200
