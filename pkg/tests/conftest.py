"""Shared builders for randomized potentials used across the suite."""

from __future__ import annotations

import numpy as np

from limper.recipes import PotentialRecipe, from_values


def random_step_recipe(
    rng: np.random.Generator, max_period: int = 12, amplitude: float = 3.0
) -> PotentialRecipe:
    """Step potential with uniform random values and period <= max_period."""
    p = int(rng.integers(1, max_period + 1))
    return from_values(rng.uniform(-amplitude, amplitude, p))


def random_staged_recipe(
    rng: np.random.Generator, max_period: int = 100_000
) -> PotentialRecipe:
    """Overlay-structured recipe shaped like the staged constructions.

    A short random base, then up to two overlays mixing unshifted
    copies with shifted blocks, keeping the period below max_period.
    """
    recipe = random_step_recipe(rng, max_period=6)
    for _ in range(int(rng.integers(1, 3))):
        budget = max_period // recipe.period
        if budget < 2:
            break
        refine = int(rng.integers(1, min(48, budget) + 1))
        units_cap = budget // refine
        if units_cap < 1:
            break
        units = int(rng.integers(1, min(units_cap, 8) + 1))
        nshift = int(rng.integers(0, min(units, 4) + 1))
        shifts = tuple(float(s) for s in rng.uniform(-0.5, 0.5, nshift))
        recipe = recipe.with_overlay(refine, units - nshift, shifts)
    return recipe
