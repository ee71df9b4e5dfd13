import numpy as np
import pytest

from intransitive_dice_lab.edgeworth.correction import (
    CLOSED_COEFFICIENTS,
    conditional_expect,
    correction_coefficients,
    correction_factor_closed,
    correction_factor_direct,
    correction_normaliser,
    expectation_table,
)
from intransitive_dice_lab.edgeworth.irwin_hall import exact_density
from intransitive_dice_lab.errors import UnsupportedK, UnsupportedOrder


@pytest.mark.parametrize("k", [1, 2])
def test_derived_coefficients_match_closed_forms(k: int) -> None:
    assert pytest.approx(CLOSED_COEFFICIENTS[k], abs=1e-12) == correction_coefficients(k)


@pytest.mark.parametrize("k", [3, 4])
def test_first_order_coefficients(k: int) -> None:
    assert pytest.approx(CLOSED_COEFFICIENTS[k], abs=1e-12) == correction_coefficients(k)[:2]


def test_closed_factor_orders() -> None:
    assert pytest.approx(1.0 + 0.5 / 10) == correction_factor_closed(10, 1, 0.0, order=1)
    assert pytest.approx(1.0 + 0.5 / 10 + 0.225 / 100) == correction_factor_closed(10, 1, 0.0)
    with pytest.raises(UnsupportedOrder):
        correction_factor_closed(10, 3, 0.0, order=2)
    with pytest.raises(UnsupportedK):
        correction_factor_closed(10, 5, 0.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_direct_factor_matches_closed_form(k: int) -> None:
    n: int = 30
    x: np.ndarray = np.linspace(-1.5, 1.5, 7)
    direct: np.ndarray = correction_factor_direct(n, k, x, backend="exact")
    closed: np.ndarray = correction_factor_closed(n, k, x)
    # Only the 1/n term is known in closed form for k = 3.
    tolerance: float = 10.0 / n**2 if 3 == k else 1e-3
    assert np.abs(direct - closed).max() < tolerance


def test_backends_agree() -> None:
    exact: float = correction_factor_direct(40, 2, 0.7, backend="exact")
    expansion: float = correction_factor_direct(40, 2, 0.7, backend="edgeworth")
    assert pytest.approx(exact, abs=1e-4) == expansion
    assert correction_normaliser(40, 2, "exact") > 0.0
    with pytest.raises(ValueError):
        correction_factor_direct(40, 2, 0.7, backend="other")


def test_conditional_second_moment() -> None:
    n: int = 60
    value: float = conditional_expect(lambda v: v[:, 0] ** 2, 1, n)
    assert pytest.approx(1.0 - 2.0 / (5 * n) - 18.0 / (175 * n * n), abs=20.0 / n**3) == value


def test_layout_validation() -> None:
    with pytest.raises(UnsupportedK):
        conditional_expect(lambda v: v[:, 0], 2, 50, layout=(1, 2))
    with pytest.raises(UnsupportedK):
        conditional_expect(lambda v: v[:, 0], 5, 50)


@pytest.mark.slow
def test_expectation_rows_within_slack() -> None:
    rows = expectation_table(100)
    assert 15 == len(rows)
    for row in rows:
        assert row.within, row.label


@pytest.mark.parametrize("k", [1, 2, 3])
def test_normaliser_is_the_full_density_at_zero(k: int) -> None:
    # Averaging the density of n-k faces over k more faces gives the density of n faces.
    n: int = 24
    assert pytest.approx(exact_density(n)(0.0), rel=1e-9) == correction_normaliser(n, k, "exact")
