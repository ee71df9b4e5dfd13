import math

import numpy as np
import pytest

from intransitive_dice_lab.dice_core.interval import SQRT3
from intransitive_dice_lab.edgeworth.quadrature import (
    evaluation_count,
    expect_uniform,
    simplex_grid,
    tensor_grid,
)
from intransitive_dice_lab.errors import QuadratureBudgetExceeded


def test_grid_weights_measure_the_domain() -> None:
    _, weights = tensor_grid(0.0, 2.0, 3, 5)
    assert pytest.approx(8.0) == weights.sum()
    points, weights = simplex_grid(0.0, 2.0, 3, 5)
    assert pytest.approx(8.0 / 6.0) == weights.sum()
    assert np.all(np.diff(points, axis=1) >= 0.0)


def test_polynomial_moments() -> None:
    assert pytest.approx(1.0, abs=1e-12) == expect_uniform(lambda v: v[:, 0] ** 2, 1)
    assert pytest.approx(0.0, abs=1e-12) == expect_uniform(lambda v: v[:, 0] * v[:, 1], 2)


def test_split_rule_handles_kinks() -> None:
    distance: float = expect_uniform(lambda v: np.abs(v[:, 0] - v[:, 1]), 2)
    assert pytest.approx(2.0 * SQRT3 / 3.0, abs=1e-12) == distance
    largest: float = expect_uniform(lambda v: v.max(axis=1), 3)
    assert pytest.approx(SQRT3 / 2.0, abs=1e-12) == largest
    unsplit: float = expect_uniform(lambda v: np.abs(v[:, 0] - v[:, 1]), 2, split=False)
    assert abs(unsplit - distance) < 1e-2


def test_budget() -> None:
    assert 12**4 * math.factorial(4) == evaluation_count(4, 12, True)
    with pytest.raises(QuadratureBudgetExceeded):
        expect_uniform(lambda v: v[:, 0], 4, budget=1000)
    with pytest.raises(ValueError):
        expect_uniform(lambda v: v[:, 0], 0)
