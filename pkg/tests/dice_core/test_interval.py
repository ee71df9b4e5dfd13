import math

import pytest

from intransitive_dice_lab.dice_core.interval import SQRT3, IntervalSpec
from intransitive_dice_lab.errors import InvalidIntervalSpec


def test_presets() -> None:
    unit: IntervalSpec = IntervalSpec.unit(10)
    assert (0.0, 1.0) == (unit.z1, unit.z2)
    assert 5.0 == unit.balance_target
    assert "unit" == unit.describe()

    wide: IntervalSpec = IntervalSpec.wide(10)
    assert 10.0 == wide.z2
    assert 50.0 == wide.balance_target
    assert wide.is_wide

    symmetric: IntervalSpec = IntervalSpec.symmetric(7)
    assert 0.0 == symmetric.balance_target
    assert math.isclose(1.0, symmetric.var_h)
    assert symmetric.is_symmetric


@pytest.mark.parametrize(
    "z1, z2, n",
    [(1.0, 1.0, 5), (2.0, 1.0, 5), (0.0, math.inf, 5), (math.nan, 1.0, 5), (0.0, 1.0, 1)],
)
def test_invalid_specs(z1: float, z2: float, n: int) -> None:
    with pytest.raises(InvalidIntervalSpec):
        IntervalSpec(z1, z2, n)


def test_cdf_is_clamped() -> None:
    spec: IntervalSpec = IntervalSpec.custom(-1.0, 3.0, 4)
    assert 0.0 == spec.cdf(-5.0)
    assert 0.25 == spec.cdf(0.0)
    assert 1.0 == spec.cdf(7.0)


def test_with_n_keeps_preset() -> None:
    assert IntervalSpec.wide(20).same_interval(IntervalSpec.wide(10).with_n(20))
    symmetric: IntervalSpec = IntervalSpec.symmetric(5).with_n(9)
    assert -SQRT3 == symmetric.z1 and 9 == symmetric.n
