import logging
import math

import numpy as np
import pytest

from intransitive_dice_lab.charfn.clt_compare import (
    ConditionedRollTrial,
    conditional_clt_compare,
    gaussian_orthant,
    orthant_monte_carlo,
    orthant_report,
)
from intransitive_dice_lab.dice_core.die import sample_balanced, sample_iid
from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.errors import IntervalMismatch, NotBalanced, OutOfRange
from intransitive_dice_lab.mc_engine.engine import MonteCarloEngine

logger: logging.Logger = logging.getLogger(__name__)


def test_gaussian_orthant() -> None:
    assert 0.25 == gaussian_orthant(0.0)
    assert 0.5 == gaussian_orthant(1.0)
    assert 0.0 == gaussian_orthant(-1.0)
    assert pytest.approx(1.0 / 3.0) == gaussian_orthant(0.5)
    with pytest.raises(OutOfRange):
        gaussian_orthant(1.5)


def test_orthant_monte_carlo() -> None:
    check = orthant_monte_carlo(0.5, 20000, np.random.default_rng(6))
    assert check.within
    assert pytest.approx(1.0 / 3.0) == check.exact


def test_orthant_report() -> None:
    report = orthant_report(5000, np.random.default_rng(7))
    assert report["exact_points"] and report["monotone"]
    assert 5 == len(report["monte_carlo"])
    assert report["passed"]


def test_conditioned_rolls_give_half_integer_sums() -> None:
    rng: np.random.Generator = np.random.default_rng(8)
    spec: IntervalSpec = IntervalSpec.wide(21)
    trial = ConditionedRollTrial(sample_balanced(spec, rng), sample_balanced(spec, rng))
    for index in range(20):
        observation = trial(rng, index)
        assert 0.0 == observation["half_integer_misses"]
        assert observation["both_positive"] <= observation["a_positive"]


def test_conditional_comparison_runs() -> None:
    rng: np.random.Generator = np.random.default_rng(9)
    spec: IntervalSpec = IntervalSpec.wide(31)
    first, second = sample_balanced(spec, rng), sample_balanced(spec, rng)
    comparison = conditional_clt_compare(first, second, 300, seed=1)
    assert 300 == comparison.trials
    assert 0 == comparison.half_integer_misses
    assert 0.0 <= comparison.estimate.point <= 1.0
    assert pytest.approx(comparison.estimate.point - comparison.gaussian) == comparison.difference
    assert math.isclose(gaussian_orthant(comparison.rho_cond), comparison.gaussian)
    # A-positive is the marginal of an odd half-integer sum, close to one half.
    assert abs(comparison.a_positive - 0.5) < 0.2


def test_windowed_conditioning() -> None:
    rng: np.random.Generator = np.random.default_rng(10)
    spec: IntervalSpec = IntervalSpec.wide(15)
    first, second = sample_balanced(spec, rng), sample_balanced(spec, rng)
    engine: MonteCarloEngine = MonteCarloEngine(1, 2, logger)
    comparison = conditional_clt_compare(first, second, 100, seed=2, engine=engine, window=1.0)
    assert 1.0 == comparison.window
    assert comparison.to_dict()["tolerance_is_calibrated"]


def test_comparison_preconditions() -> None:
    rng: np.random.Generator = np.random.default_rng(11)
    wide: IntervalSpec = IntervalSpec.wide(11)
    balanced = sample_balanced(wide, rng)
    with pytest.raises(NotBalanced):
        conditional_clt_compare(sample_iid(wide, rng), balanced, 10, seed=0)
    with pytest.raises(IntervalMismatch):
        conditional_clt_compare(balanced, sample_balanced(IntervalSpec.unit(11), rng), 10, seed=0)
