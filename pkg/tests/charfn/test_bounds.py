from typing import Tuple

import numpy as np
import pytest

from intransitive_dice_lab.charfn.bounds import (
    ViolationReport,
    check_circle_averages,
    check_decay_box,
    check_exp_nq,
    check_face_perturbation,
    check_large_gamma,
    check_lipschitz,
    check_piece_refinement,
    check_qr_remainder,
    decay_box_limits,
    decay_grid,
    density_bounds_report,
    dist_to_lattice,
    perturb_one_face,
)
from intransitive_dice_lab.dice_core.die import Die, sample_balanced
from intransitive_dice_lab.dice_core.interval import IntervalSpec


@pytest.fixture
def wide_pair() -> Tuple[Die, Die]:
    rng: np.random.Generator = np.random.default_rng(31)
    spec: IntervalSpec = IntervalSpec.wide(51)
    return sample_balanced(spec, rng), sample_balanced(spec, rng)


def test_violation_report() -> None:
    report: ViolationReport = ViolationReport("demo")
    report.record(np.array([0.5, 2.0]), np.array([1.0, 1.0]))
    assert 2 == report.samples and 1 == report.violations
    assert 2.0 == report.max_ratio
    other: ViolationReport = ViolationReport("demo")
    other.record(np.array([0.1]), np.array([1.0]))
    report.merge(other)
    assert 3 == report.samples
    assert not report.to_dict()["passed"]


def test_pair_inequalities_hold(wide_pair: Tuple[Die, Die]) -> None:
    first, second = wide_pair
    rng: np.random.Generator = np.random.default_rng(4)
    reports = [
        check_large_gamma(first, second, 500, rng),
        check_lipschitz(first, second, 500, rng),
        check_face_perturbation(first, second, 1.0, 50, rng),
        check_piece_refinement(first, second, 200, rng),
        *check_qr_remainder(first, second, 500, rng),
    ]
    for report in reports:
        assert report.passed, report.to_dict()
        assert report.samples > 0


def test_perturb_one_face_stays_inside(wide_pair: Tuple[Die, Die]) -> None:
    first, _ = wide_pair
    moved: Die = perturb_one_face(first, 2.0, np.random.default_rng(0))
    changed: np.ndarray = np.flatnonzero(moved.faces != first.faces)
    assert len(changed) <= 1
    assert np.all(np.abs(moved.faces - first.faces) <= 2.0)
    assert np.all((moved.faces >= 0.0) & (moved.faces <= 51.0))


def test_scalar_inequalities_hold() -> None:
    rng: np.random.Generator = np.random.default_rng(5)
    for report in check_circle_averages(2000, rng):
        assert report.passed
    assert check_exp_nq(2000, rng, "complex").passed
    assert check_exp_nq(2000, rng, "real").passed
    with pytest.raises(ValueError):
        check_exp_nq(10, rng, "other")


def test_dist_to_lattice() -> None:
    assert pytest.approx(0.25) == dist_to_lattice(1.75)
    assert pytest.approx(0.1) == dist_to_lattice(-2.1)
    assert pytest.approx([0.0, 0.5]) == dist_to_lattice(np.array([3.0, 2.5]))
    assert pytest.approx(1.0) == dist_to_lattice(4.0, period=3.0)
    with pytest.raises(ValueError):
        dist_to_lattice(1.0, period=0.0)


def test_decay_box(wide_pair: Tuple[Die, Die]) -> None:
    first, second = wide_pair
    grid: np.ndarray = decay_grid(first.n, 7)
    assert (343, 3) == grid.shape
    _, gamma_limit, threshold = decay_box_limits(first.n)
    report = check_decay_box(first, second, grid)
    expected_outside: int = int(np.count_nonzero(np.abs(grid[:, 2]) > gamma_limit))
    assert expected_outside == report.points_outside_box
    assert threshold == report.threshold
    assert 0.0 <= report.max_abs <= 1.0 + 1e-12
    with pytest.raises(ValueError):
        decay_grid(first.n, 1)


@pytest.mark.parametrize("n", [10, 60])
def test_density_bounds(n: int) -> None:
    report = density_bounds_report(n)
    assert ("exact" if n <= 40 else "edgeworth") == report["backend"]
    assert report["passed"]
    assert report["lower_bound"] <= report["u0"] <= 1.0 / n
    assert 4 == len(report["windows"])
