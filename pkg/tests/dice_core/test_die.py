from typing import List

import numpy as np
import pytest

from intransitive_dice_lab.dice_core.die import (
    BeatsResult,
    Die,
    beats_fast,
    beats_naive,
    draw_balanced_faces,
    efron_dice,
    f_count,
    margin_of,
    rescale,
    roll_win_probability,
    sample_balanced,
    sample_iid,
)
from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.errors import (
    AttemptsExhausted,
    DimensionMismatch,
    NotBalanced,
    OutOfRange,
)


def test_efron_cycle() -> None:
    dice = efron_dice()
    for i in range(4):
        outcome = beats_fast(dice[i], dice[(i + 1) % 4])
        assert 12 == outcome.margin
        assert BeatsResult.FirstWins == outcome.result
        assert outcome == beats_naive(dice[i], dice[(i + 1) % 4])


def test_beats_is_antisymmetric() -> None:
    rng: np.random.Generator = np.random.default_rng(7)
    spec: IntervalSpec = IntervalSpec.unit(31)
    for _ in range(20):
        first: Die = sample_balanced(spec, rng)
        second: Die = sample_balanced(spec, rng)
        forward = beats_fast(first, second)
        assert -forward.margin == beats_fast(second, first).margin
        assert forward.margin == beats_naive(first, second).margin
        assert forward.margin == margin_of(first.sorted_faces, second.sorted_faces)
        assert 1 == abs(forward.margin) % 2


def test_beats_handles_ties() -> None:
    spec: IntervalSpec = IntervalSpec.custom(0.0, 6.0, 3)
    first: Die = Die([1, 2, 3], spec)
    second: Die = Die([2, 2, 2], spec)
    assert 0 == beats_naive(first, second).margin
    assert BeatsResult.Draw == beats_fast(first, second).result


def test_self_match_is_a_draw() -> None:
    die: Die = sample_balanced(IntervalSpec.wide(11), np.random.default_rng(1))
    assert BeatsResult.Draw == beats_fast(die, die).result


def test_balanced_sampler_hits_target() -> None:
    rng: np.random.Generator = np.random.default_rng(42)
    for spec in [IntervalSpec.unit(101), IntervalSpec.wide(50), IntervalSpec.symmetric(9)]:
        faces, attempts = draw_balanced_faces(spec, rng)
        assert attempts >= 1
        assert spec.n == faces.shape[0]
        assert np.all(faces >= spec.z1) and np.all(faces <= spec.z2)
        die: Die = Die(faces, spec, is_balanced=True)
        assert abs(die.face_sum() - spec.balance_target) <= spec.balance_tolerance


def test_balanced_sampler_is_deterministic() -> None:
    spec: IntervalSpec = IntervalSpec.unit(25)
    first, _ = draw_balanced_faces(spec, np.random.default_rng(3))
    second, _ = draw_balanced_faces(spec, np.random.default_rng(3))
    assert np.array_equal(first, second)


def test_balanced_sampler_budget() -> None:
    with pytest.raises(AttemptsExhausted) as exc_info:
        # A candidate is almost never accepted on the first try for large n.
        for seed in range(50):
            draw_balanced_faces(IntervalSpec.unit(10000), np.random.default_rng(seed), 1)
    assert 1 == exc_info.value.attempts
    with pytest.raises(ValueError):
        draw_balanced_faces(IntervalSpec.unit(5), np.random.default_rng(0), 0)


def test_die_validation() -> None:
    spec: IntervalSpec = IntervalSpec.unit(3)
    with pytest.raises(DimensionMismatch):
        Die([0.1, 0.2], spec)
    with pytest.raises(OutOfRange):
        Die([0.1, 0.2, 1.5], spec)
    with pytest.raises(NotBalanced):
        Die([0.1, 0.2, 0.3], spec, is_balanced=True)
    assert Die([0.2, 0.5, 0.8], spec).is_balanced
    assert not Die([0.1, 0.2, 0.3], spec).is_balanced


def test_faces_are_read_only() -> None:
    die: Die = sample_iid(IntervalSpec.unit(5), np.random.default_rng(0))
    with pytest.raises(ValueError):
        die.faces[0] = 0.5


def test_rescale_preserves_order_and_balance() -> None:
    die: Die = sample_balanced(IntervalSpec.unit(21), np.random.default_rng(5))
    mapped: Die = rescale(die, IntervalSpec.symmetric(21))
    assert np.array_equal(np.argsort(die.faces), np.argsort(mapped.faces))
    assert mapped.is_balanced
    assert abs(mapped.face_sum()) <= 1e-9 * 21 * 4
    with pytest.raises(DimensionMismatch):
        rescale(die, IntervalSpec.unit(20))


def test_rescale_preserves_margins() -> None:
    rng: np.random.Generator = np.random.default_rng(12)
    unit: IntervalSpec = IntervalSpec.unit(17)
    wide: IntervalSpec = IntervalSpec.wide(17)
    for _ in range(100):
        first: Die = sample_iid(unit, rng)
        second: Die = sample_iid(unit, rng)
        assert (
            beats_fast(first, second).margin
            == beats_fast(rescale(first, wide), rescale(second, wide)).margin
        )


def test_rescaled_balanced_die_hits_wide_target() -> None:
    n: int = 25
    die: Die = sample_balanced(IntervalSpec.unit(n), np.random.default_rng(21))
    mapped: Die = rescale(die, IntervalSpec.wide(n))
    assert pytest.approx(n * n / 2.0, abs=1e-9 * n * n) == mapped.face_sum()
    assert mapped.is_balanced


def test_counting_helpers() -> None:
    spec: IntervalSpec = IntervalSpec.custom(0.0, 6.0, 6)
    die: Die = Die([1, 1, 1, 5, 5, 5], spec)
    assert 0 == f_count(die, 0.5)
    assert 3 == f_count(die, 1.0)
    assert 6 == f_count(die, 6.0)

    first, second, _, _ = efron_dice()
    # 24 winning pairs out of 36.
    assert pytest.approx(24 / 36) == roll_win_probability(first, second)


def test_different_face_counts_rejected() -> None:
    rng: np.random.Generator = np.random.default_rng(0)
    small: Die = sample_iid(IntervalSpec.unit(3), rng)
    large: Die = sample_iid(IntervalSpec.unit(4), rng)
    checks: List = [beats_fast, beats_naive, roll_win_probability]
    for check in checks:
        with pytest.raises(DimensionMismatch):
            check(small, large)
