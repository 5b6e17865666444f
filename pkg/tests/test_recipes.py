"""Recipe construction, site evaluation, and serialization."""

import numpy as np
import pytest

from limper.recipes import (
    Overlay,
    PotentialRecipe,
    StepPiece,
    constant_potential,
    from_values,
    step_potential,
)


def test_step_piece_rejects_empty_run():
    with pytest.raises(ValueError):
        StepPiece(1.0, 0)


def test_overlay_needs_a_unit():
    with pytest.raises(ValueError):
        Overlay(2, 0, ())
    with pytest.raises(ValueError):
        Overlay(0, 1, ())
    assert Overlay(1, 0, (0.5,)).units == 1


def test_recipe_needs_a_base():
    with pytest.raises(ValueError):
        PotentialRecipe(())


def test_period_multiplies_per_overlay():
    r = step_potential([(1.0, 2), (0.0, 3)])
    assert r.base_period == 5
    r = r.with_overlay(4, 2, (0.1,))
    r = r.with_overlay(1, 0, (-0.2, 0.3))
    assert r.level_periods == (5, 5 * 4 * 3, 5 * 4 * 3 * 2)
    assert r.period == 120


def test_value_matches_materialize():
    rng = np.random.default_rng(10)
    r = from_values(rng.uniform(-2, 2, 7))
    r = r.with_overlay(3, 1, (0.25, -0.5))
    cycle = r.materialize()
    assert cycle.shape == (7 * 3 * 3,)
    got = np.array([r.value(n) for n in range(r.period)])
    np.testing.assert_array_equal(got, cycle)
    # periodic extension wraps in both directions
    assert r.value(-1) == cycle[-1]
    assert r.value(r.period + 5) == cycle[5]


def test_shifted_blocks_follow_the_copies():
    base = constant_potential(1.0)
    r = base.with_overlay(2, 2, (10.0, 20.0))
    np.testing.assert_array_equal(
        r.materialize(), [1, 1, 1, 1, 11, 11, 21, 21]
    )


def test_values_window_long_period_path():
    # period too long to materialize per call: site loop must agree
    base = from_values([0.0, 1.0, 2.0])
    r = base.with_overlay(40_000, 1, (5.0,))
    assert r.period == 240_000
    window = r.values(119_998, 5)
    np.testing.assert_array_equal(window, [1, 2, 5, 6, 7])


def test_values_rejects_negative_count():
    with pytest.raises(ValueError):
        constant_potential(0.0).values(0, -1)


def test_materialize_refuses_absurd_periods():
    r = constant_potential(0.0).with_overlay(60_000_000, 1)
    with pytest.raises(ValueError):
        r.materialize()


def test_parent_pops_one_overlay():
    r = constant_potential(1.0).with_overlay(2, 1, (0.5,))
    assert r.parent() == constant_potential(1.0)
    with pytest.raises(ValueError):
        constant_potential(1.0).parent()


def test_sup_abs_bound_dominates_samples():
    rng = np.random.default_rng(11)
    r = from_values(rng.uniform(-2, 2, 5))
    r = r.with_overlay(2, 1, (0.5, -0.75))
    bound = r.sup_abs_bound()
    assert np.abs(r.materialize()).max() <= bound + 1e-15


def test_from_values_merges_runs():
    r = from_values([1.0, 1.0, 2.0, 2.0, 2.0, 1.0])
    assert r.base == (
        StepPiece(1.0, 2), StepPiece(2.0, 3), StepPiece(1.0, 1)
    )
    with pytest.raises(ValueError):
        from_values([])


def test_json_roundtrip_is_exact():
    r = from_values([0.1, -0.3, 0.1]).with_overlay(7, 2, (1e-17, -2.5))
    again = PotentialRecipe.from_jsonable(r.to_jsonable())
    assert again == r
    assert again.period == r.period
