import logging
from typing import Dict

import numpy as np
import pytest

from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.gstats.g_moments import balanced_moment_asymptotics
from intransitive_dice_lab.gstats.sampling import (
    MOMENT_STATISTICS,
    MomentTrial,
    sample_moment_statistics,
)
from intransitive_dice_lab.mc_engine.accumulator import Accumulator
from intransitive_dice_lab.mc_engine.engine import MonteCarloEngine

logger: logging.Logger = logging.getLogger(__name__)


def test_trial_reports_every_statistic() -> None:
    observation: Dict[str, float] = MomentTrial(IntervalSpec.unit(21))(
        np.random.default_rng(0), 0
    )
    assert set(MOMENT_STATISTICS) == set(observation)
    assert observation["var_a"] > 0.0
    assert pytest.approx(observation["var_a"] ** 2) == observation["var_a_sq"]
    assert observation["sup_exceeds"] in (0.0, 1.0)


@pytest.mark.slow
def test_balanced_variance_is_near_n_over_15() -> None:
    n: int = 200
    results: Dict[str, Accumulator] = sample_moment_statistics(
        IntervalSpec.symmetric(n), 400, MonteCarloEngine(1, 17, logger)
    )
    target: float = balanced_moment_asymptotics(n)["var_a"]
    var_a: Accumulator = results["var_a"]
    # Lower-order corrections are O(1), well inside 10% of n/15 at this n.
    assert abs(var_a.mean - target) <= 4.0 * var_a.sem() + 0.1 * target
    assert 0.0 == results["sup_exceeds"].mean
