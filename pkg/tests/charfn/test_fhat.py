import math
from typing import Tuple

import numpy as np
import pytest

from intransitive_dice_lab.charfn.fhat import (
    fhat_exact,
    ghat,
    pieces,
    qr_decompose,
    quadratic_form,
)
from intransitive_dice_lab.dice_core.die import Die, sample_balanced, sample_iid
from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.errors import IntervalMismatch, NotBalanced
from intransitive_dice_lab.gstats.g_moments import GMoments, g_values, moments_quadrature


@pytest.fixture
def wide_pair() -> Tuple[Die, Die]:
    rng: np.random.Generator = np.random.default_rng(99)
    spec: IntervalSpec = IntervalSpec.wide(11)
    return sample_balanced(spec, rng), sample_balanced(spec, rng)


def test_value_at_origin(wide_pair: Tuple[Die, Die]) -> None:
    first, second = wide_pair
    assert pytest.approx(1.0, abs=1e-12) == fhat_exact(first, second, 0.0, 0.0, 0.0)


def test_matches_midpoint_rule(wide_pair: Tuple[Die, Die]) -> None:
    first, second = wide_pair
    n: int = first.n
    t: np.ndarray = (np.arange(1_000_000) + 0.5) * n / 1_000_000
    ga: np.ndarray = g_values(first, t)
    gb: np.ndarray = g_values(second, t)
    for alpha, beta, gamma in [(0.3, -0.1, 0.05), (-0.45, 0.2, 0.4), (0.01, 0.02, -0.03)]:
        phase: np.ndarray = alpha * ga + beta * gb + gamma * (t - n / 2.0)
        numeric: complex = complex(np.exp(2j * np.pi * phase).mean())
        assert abs(numeric - fhat_exact(first, second, alpha, beta, gamma)) < 1e-4


def test_conjugate_symmetry(wide_pair: Tuple[Die, Die]) -> None:
    first, second = wide_pair
    value: complex = fhat_exact(first, second, 0.2, 0.3, -0.1)
    assert pytest.approx(value.conjugate(), abs=1e-12) == fhat_exact(first, second, -0.2, -0.3, 0.1)
    assert abs(value) <= 1.0 + 1e-12


def test_partition_covers_interval(wide_pair: Tuple[Die, Die]) -> None:
    first, second = wide_pair
    parts = pieces(first, second)
    assert pytest.approx(float(first.n)) == parts.widths.sum()
    assert np.all(parts.widths > 0.0)


def test_requires_wide_interval() -> None:
    rng: np.random.Generator = np.random.default_rng(0)
    unit: IntervalSpec = IntervalSpec.unit(5)
    with pytest.raises(IntervalMismatch):
        fhat_exact(sample_iid(unit, rng), sample_iid(unit, rng), 0.1, 0.1, 0.1)


def test_gaussian_surrogate(wide_pair: Tuple[Die, Die]) -> None:
    first, second = wide_pair
    moments: GMoments = moments_quadrature(first, second)
    assert 1.0 == ghat(moments, first.n, 0.0, 0.0, 0.0)
    assert pytest.approx(2.0 * math.pi**2 * 0.01 * moments.var_a) == quadratic_form(
        moments, 0.1, 0.0, 0.0
    )
    rng: np.random.Generator = np.random.default_rng(1)
    frequencies: np.ndarray = rng.uniform(-1.0, 1.0, size=(3, 100))
    assert np.all(quadratic_form(moments, *frequencies) >= -1e-12)


def test_qr_decomposition(wide_pair: Tuple[Die, Die]) -> None:
    first, second = wide_pair
    decomposition = qr_decompose(first, second, 0.002, -0.001, 0.003)
    assert decomposition.within_bound
    assert abs(decomposition.r_actual) <= decomposition.r_tight + 1e-9
    assert decomposition.q >= 0.0


def test_qr_requires_balanced_dice() -> None:
    rng: np.random.Generator = np.random.default_rng(2)
    spec: IntervalSpec = IntervalSpec.wide(9)
    with pytest.raises(NotBalanced):
        qr_decompose(sample_iid(spec, rng), sample_balanced(spec, rng), 0.1, 0.1, 0.1)
