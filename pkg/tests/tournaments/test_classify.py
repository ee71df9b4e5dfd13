import itertools
from typing import List, Sequence, Tuple

import numpy as np
import pytest

from intransitive_dice_lab.dice_core.die import Die, beats_fast, efron_dice, sample_balanced
from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.tournaments.classify import (
    PAIRS4,
    Tournament3Class,
    Tournament4Class,
    classify3,
    classify4,
    out_degrees,
    sub_margins3,
)

# Cyclic triangles among the four 3-subsets of each 4-tournament class.
CYCLES_PER_CLASS = {
    Tournament4Class.Transitive: 0,
    Tournament4Class.WinnerOrLoserPlusCycle: 1,
    Tournament4Class.FourCycle: 2,
}


def _margin_matrix(dice: Sequence[Die]) -> List[List[int]]:
    return [[beats_fast(first, second).margin for second in dice] for first in dice]


def _matrix_from_margins(margins: Sequence[int]) -> List[List[int]]:
    matrix: List[List[int]] = [[0] * 4 for _ in range(4)]
    for (i, j), margin in zip(PAIRS4, margins):
        matrix[i][j] = margin
        matrix[j][i] = -margin
    return matrix


def _relabeled(matrix: List[List[int]], order: Tuple[int, ...]) -> List[int]:
    return [matrix[order[i]][order[j]] for i, j in PAIRS4]


def test_classify3() -> None:
    assert Tournament3Class.Transitive == classify3(3, 5, 7)
    assert Tournament3Class.Cycle == classify3(3, 5, -7)
    assert Tournament3Class.Cycle == classify3(-3, -5, 7)
    assert Tournament3Class.Degenerate == classify3(3, 0, -7)


@pytest.mark.parametrize(
    "margins, expected",
    [
        ([1, 1, 1, 1, 1, 1], Tournament4Class.Transitive),
        ([1, 1, -1, 1, 1, 1], Tournament4Class.FourCycle),
        ([1, 1, 1, 1, -1, 1], Tournament4Class.WinnerOrLoserPlusCycle),
        ([-1, -1, -1, 1, -1, 1], Tournament4Class.WinnerOrLoserPlusCycle),
        ([1, 1, 1, 0, 1, 1], Tournament4Class.Degenerate),
    ],
)
def test_classify4(margins: list, expected: Tournament4Class) -> None:
    assert expected == classify4(margins)


def test_classify4_needs_six_margins() -> None:
    with pytest.raises(ValueError):
        classify4([1, 1, 1])


def test_out_degrees_sum_to_edge_count() -> None:
    degrees = out_degrees(4, ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)), [1, -1, 1, -1, 1, 1])
    assert [2, 1, 3, 0] == degrees
    assert 6 == sum(degrees)


def test_sub_margins3() -> None:
    margins = [10, 20, 30, 40, 50, 60]
    assert (40, 60, 50) == sub_margins3(margins, 0)
    assert (20, 60, 30) == sub_margins3(margins, 1)
    assert (10, 40, 20) == sub_margins3(margins, 3)


def test_classify_real_dice() -> None:
    spec: IntervalSpec = IntervalSpec.custom(0.0, 10.0, 3)
    a: Die = Die([2, 4, 9], spec)
    b: Die = Die([1, 6, 8], spec)
    c: Die = Die([3, 5, 7], spec)
    margins: Tuple[int, int, int] = (
        beats_fast(a, b).margin,
        beats_fast(b, c).margin,
        beats_fast(a, c).margin,
    )
    assert (1, 1, -1) == margins
    assert Tournament3Class.Cycle == classify3(*margins)

    matrix: List[List[int]] = _margin_matrix(efron_dice())
    assert Tournament4Class.Degenerate == classify4([matrix[i][j] for i, j in PAIRS4])


@pytest.mark.parametrize("signs", list(itertools.product([-1, 1], repeat=6)))
def test_classify4_is_label_free_and_matches_its_triangles(signs: Tuple[int, ...]) -> None:
    margins: List[int] = list(signs)
    expected: Tournament4Class = classify4(margins)
    matrix: List[List[int]] = _matrix_from_margins(margins)
    for order in itertools.permutations(range(4)):
        assert expected == classify4(_relabeled(matrix, order))
    cycles: int = sum(
        Tournament3Class.Cycle == classify3(*sub_margins3(margins, dropped))
        for dropped in range(4)
    )
    assert CYCLES_PER_CLASS[expected] == cycles


def test_classify4_on_sampled_dice_is_label_free() -> None:
    rng: np.random.Generator = np.random.default_rng(41)
    spec: IntervalSpec = IntervalSpec.symmetric(15)
    for _ in range(50):
        matrix: List[List[int]] = _margin_matrix([sample_balanced(spec, rng) for _ in range(4)])
        expected: Tournament4Class = classify4([matrix[i][j] for i, j in PAIRS4])
        for order in itertools.permutations(range(4)):
            assert expected == classify4(_relabeled(matrix, order))


def test_degenerate_four_tournament_has_a_degenerate_triangle() -> None:
    margins: List[int] = [1, -1, 1, 0, 1, -1]
    assert Tournament4Class.Degenerate == classify4(margins)
    assert any(
        Tournament3Class.Degenerate == classify3(*sub_margins3(margins, dropped))
        for dropped in range(4)
    )
