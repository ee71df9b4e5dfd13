import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate

from intransitive_dice_lab.charfn.fhat import (
    Pieces,
    fhat_from_pieces,
    pieces,
    quadratic_form,
    remainder_bounds,
)
from intransitive_dice_lab.dice_core.die import Die
from intransitive_dice_lab.dice_core.interval import SQRT3
from intransitive_dice_lab.edgeworth.expansion import EdgeworthDensity
from intransitive_dice_lab.edgeworth.irwin_hall import MAX_EXACT_N, exact_density
from intransitive_dice_lab.errors import NotBalanced
from intransitive_dice_lab.gstats.g_moments import GMoments, moments_quadrature, sup_norm_g

logger: logging.Logger = logging.getLogger(__name__)

SLACK: float = 1e-12


@dataclass
class ViolationReport:
    """
    Outcome of checking a deterministic inequality lhs <= rhs on samples.

    `max_ratio` is the largest lhs/rhs seen over samples with rhs > 0.
    """

    name: str
    samples: int = 0
    violations: int = 0
    max_ratio: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return 0 == self.violations

    def record(self, lhs: np.ndarray, rhs: np.ndarray, slack: float = SLACK) -> None:
        lhs = np.atleast_1d(np.asarray(lhs, dtype=np.float64))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=np.float64))
        self.samples += int(lhs.size)
        self.violations += int(np.count_nonzero(lhs > rhs + slack))
        positive: np.ndarray = rhs > 0.0
        if np.any(positive):
            self.max_ratio = max(self.max_ratio, float(np.max(lhs[positive] / rhs[positive])))

    def merge(self, other: "ViolationReport") -> None:
        self.samples += other.samples
        self.violations += other.violations
        self.max_ratio = max(self.max_ratio, other.max_ratio)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "samples": self.samples,
            "violations": self.violations,
            "max_ratio": self.max_ratio,
            "passed": self.passed,
            **self.details,
        }


def _frequencies(rng: np.random.Generator, count: int, scale: float) -> np.ndarray:
    """
    Frequencies with log-uniform magnitude in [scale * 1e-4, scale] and a random sign.
    """
    magnitude: np.ndarray = scale * 10.0 ** rng.uniform(-4.0, 0.0, size=count)
    return magnitude * rng.choice([-1.0, 1.0], size=count)


def check_large_gamma(
    first: Die, second: Die, sample_count: int, rng: np.random.Generator
) -> ViolationReport:
    """
    Checks |f-hat| * |gamma - alpha - beta| <= 1 on frequencies with
    |gamma - alpha - beta| >= 1.01.
    """
    parts: Pieces = pieces(first, second)
    alpha: np.ndarray = rng.uniform(-0.5, 0.5, size=sample_count)
    beta: np.ndarray = rng.uniform(-0.5, 0.5, size=sample_count)
    offset: np.ndarray = rng.uniform(1.01, 10.0, size=sample_count) * rng.choice(
        [-1.0, 1.0], size=sample_count
    )
    values: np.ndarray = fhat_from_pieces(parts, first.n, alpha, beta, alpha + beta + offset)
    report: ViolationReport = ViolationReport("large_gamma")
    report.record(np.abs(values) * np.abs(offset), np.ones(sample_count))
    return report


def check_lipschitz(
    first: Die, second: Die, pair_count: int, rng: np.random.Generator
) -> ViolationReport:
    """
    Checks |f-hat(alpha, beta, gamma) - f-hat(alpha0, beta0, gamma)| <=
    2 pi (|alpha - alpha0| sup|g_A| + |beta - beta0| sup|g_B|).
    """
    parts: Pieces = pieces(first, second)
    n: int = first.n
    alpha0: np.ndarray = rng.uniform(-0.5, 0.5, size=pair_count)
    beta0: np.ndarray = rng.uniform(-0.5, 0.5, size=pair_count)
    gamma: np.ndarray = rng.uniform(-0.5, 0.5, size=pair_count)
    d_alpha: np.ndarray = _frequencies(rng, pair_count, 1.0 / n)
    d_beta: np.ndarray = _frequencies(rng, pair_count, 1.0 / n)
    # The inequality is trivially tight at equal frequencies.
    d_alpha[0] = 0.0
    d_beta[0] = 0.0
    base: np.ndarray = fhat_from_pieces(parts, n, alpha0, beta0, gamma)
    moved: np.ndarray = fhat_from_pieces(parts, n, alpha0 + d_alpha, beta0 + d_beta, gamma)
    bound: np.ndarray = (
        2.0 * math.pi * (np.abs(d_alpha) * sup_norm_g(first) + np.abs(d_beta) * sup_norm_g(second))
    )
    report: ViolationReport = ViolationReport("lipschitz")
    report.record(np.abs(moved - base), bound)
    return report


def perturb_one_face(die: Die, epsilon: float, rng: np.random.Generator) -> Die:
    """
    :return: A copy of the die with one random face moved by at most epsilon,
        staying inside the interval.
    """
    faces: np.ndarray = die.faces.copy()
    index: int = int(rng.integers(die.n))
    shift: float = float(rng.uniform(-epsilon, epsilon))
    faces[index] = min(die.spec.z2, max(die.spec.z1, faces[index] + shift))
    return Die(faces, die.spec, is_balanced=False)


def check_face_perturbation(
    first: Die, second: Die, epsilon: float, pair_count: int, rng: np.random.Generator
) -> ViolationReport:
    """
    Checks |f-hat - f-hat'| <= 2 epsilon/n where f-hat' belongs to a copy of
    the first die with one face moved by at most epsilon. Each sample uses a
    fresh perturbation and a fresh frequency.
    """
    n: int = first.n
    report: ViolationReport = ViolationReport("face_perturbation", details={"epsilon": epsilon})
    parts: Pieces = pieces(first, second)
    for _ in range(pair_count):
        moved: Die = perturb_one_face(first, epsilon, rng)
        alpha, beta, gamma = rng.uniform(-0.5, 0.5, size=3)
        lhs: float = abs(
            complex(fhat_from_pieces(parts, n, alpha, beta, gamma))
            - complex(fhat_from_pieces(pieces(moved, second), n, alpha, beta, gamma))
        )
        report.record(np.array([lhs]), np.array([2.0 * epsilon / n]))
    return report


def check_piece_refinement(
    first: Die, second: Die, sample_count: int, rng: np.random.Generator
) -> ViolationReport:
    """
    Recomputes f-hat after splitting the partition at random extra points and
    reports the largest change; both values integrate the same function.
    """
    n: int = first.n
    refined: Pieces = pieces(first, second, rng.uniform(0.0, float(n), size=2 * n))
    alpha: np.ndarray = rng.uniform(-0.5, 0.5, size=sample_count)
    beta: np.ndarray = rng.uniform(-0.5, 0.5, size=sample_count)
    gamma: np.ndarray = rng.uniform(-0.5, 0.5, size=sample_count)
    difference: np.ndarray = np.abs(
        fhat_from_pieces(pieces(first, second), n, alpha, beta, gamma)
        - fhat_from_pieces(refined, n, alpha, beta, gamma)
    )
    report: ViolationReport = ViolationReport("piece_refinement")
    report.record(difference, np.full(sample_count, 1e-12), slack=0.0)
    return report


def check_qr_remainder(
    first: Die,
    second: Die,
    sample_count: int,
    rng: np.random.Generator,
    moments: Optional[GMoments] = None,
) -> List[ViolationReport]:
    """
    Checks |f-hat - 1 + Q| against the simplified and the tight cubic bound
    at small frequencies, where the cubic term controls the remainder.

    :raise NotBalanced: If a die is not balanced.
    """
    for die in (first, second):
        if not die.is_balanced:
            raise NotBalanced(f"{die} is not balanced; the expansion assumes centred U_A.")
    if None is moments:
        moments = moments_quadrature(first, second)
    n: int = first.n
    alpha: np.ndarray = _frequencies(rng, sample_count, 1.0 / max(moments.sup_a, 1.0))
    beta: np.ndarray = _frequencies(rng, sample_count, 1.0 / max(moments.sup_b, 1.0))
    gamma: np.ndarray = _frequencies(rng, sample_count, 2.0 / n)
    values: np.ndarray = fhat_from_pieces(pieces(first, second), n, alpha, beta, gamma)
    remainder: np.ndarray = np.abs(values - 1.0 + quadratic_form(moments, alpha, beta, gamma))
    simplified, tight = remainder_bounds(moments, n, alpha, beta, gamma)
    reports: List[ViolationReport] = [
        ViolationReport("qr_remainder"),
        ViolationReport("qr_remainder_tight"),
    ]
    # Rounding in f-hat is of order 1e-15 per piece; allow for it at tiny frequencies.
    reports[0].record(remainder, simplified, slack=1e-12 * n)
    reports[1].record(remainder, tight, slack=1e-12 * n)
    return reports


def decay_box_limits(n: int) -> Tuple[float, float, float]:
    """
    :return: The alpha/beta box half-width 1e10 log n/n, the gamma box
        half-width 6 log^2 n/n^1.5 and the decay threshold 1 - 10 log n/n.
    """
    log_n: float = math.log(n)
    return 1e10 * log_n / n, 6.0 * log_n * log_n / n**1.5, 1.0 - 10.0 * log_n / n


@dataclass(frozen=True)
class DecayBoxReport:
    n: int
    grid_points: int
    points_outside_box: int
    max_abs: float
    threshold: float
    exceedances: int
    max_abs_pow_n: float

    @property
    def violated(self) -> bool:
        return self.exceedances > 0

    def to_dict(self) -> Dict[str, Any]:
        return {**self.__dict__, "violated": self.violated}


def decay_grid(n: int, points_per_axis: int, gamma_max: float = 0.5) -> np.ndarray:
    """
    :return: A (points_per_axis^3, 3) grid over |alpha|, |beta| <= 1/2 and
        |gamma| <= gamma_max.
    """
    if points_per_axis < 2:
        raise ValueError(f"points_per_axis must be at least 2, got {points_per_axis}")
    ab: np.ndarray = np.linspace(-0.5, 0.5, points_per_axis)
    g: np.ndarray = np.linspace(-gamma_max, gamma_max, points_per_axis)
    grids: List[np.ndarray] = np.meshgrid(ab, ab, g, indexing="ij")
    return np.stack([grid.ravel() for grid in grids], axis=1)


def check_decay_box(first: Die, second: Die, grid: np.ndarray) -> DecayBoxReport:
    """
    Evaluates |f-hat| on the grid points outside the box around the origin
    and counts those above 1 - 10 log n/n. This bound only holds for most
    dice, so exceedances are reported rather than raised.

    :param grid: An (m, 3) array of (alpha, beta, gamma) points.
    """
    n: int = first.n
    ab_limit, gamma_limit, threshold = decay_box_limits(n)
    outside: np.ndarray = (
        (np.abs(grid[:, 0]) > ab_limit)
        | (np.abs(grid[:, 1]) > ab_limit)
        | (np.abs(grid[:, 2]) > gamma_limit)
    )
    selected: np.ndarray = grid[outside]
    if 0 == selected.shape[0]:
        logger.warning(f"No grid point lies outside the decay box at n={n}.")
        return DecayBoxReport(n, grid.shape[0], 0, 0.0, threshold, 0, 0.0)
    values: np.ndarray = np.abs(
        fhat_from_pieces(pieces(first, second), n, selected[:, 0], selected[:, 1], selected[:, 2])
    )
    max_abs: float = float(values.max())
    return DecayBoxReport(
        n=n,
        grid_points=grid.shape[0],
        points_outside_box=int(selected.shape[0]),
        max_abs=max_abs,
        threshold=threshold,
        exceedances=int(np.count_nonzero(values > threshold)),
        max_abs_pow_n=max_abs**n,
    )


def dist_to_lattice(x: Any, period: float = 1.0) -> Any:
    """
    Distance from x to the nearest integer multiple of `period`.
    """
    if period <= 0.0:
        raise ValueError(f"period must be positive, got {period}")
    scaled: Any = np.asarray(x, dtype=np.float64) / period
    distance: Any = np.abs(scaled - np.round(scaled)) * period
    if 0 == np.ndim(distance):
        return float(distance)
    return distance


def _e(theta: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * theta)


def check_circle_averages(sample_count: int, rng: np.random.Generator) -> List[ViolationReport]:
    """
    Checks |e(t1) + e(t2)|/2 <= 1 - d(t1 - t2)^2 and
    |e(t1) + e(t2) + e(t3) + e(t4)|/4 <= 1 - d(t1 - t2 + t3 - t4)^2/4, where d
    is the distance to the nearest integer.
    """
    theta: np.ndarray = rng.uniform(-3.0, 3.0, size=(sample_count, 4))
    two_term: ViolationReport = ViolationReport("circle_average_two_term")
    two_term.record(
        np.abs(_e(theta[:, 0]) + _e(theta[:, 1])) / 2.0,
        1.0 - dist_to_lattice(theta[:, 0] - theta[:, 1]) ** 2,
    )
    four_term: ViolationReport = ViolationReport("circle_average_four_term")
    four_term.record(
        np.abs(_e(theta).sum(axis=1)) / 4.0,
        1.0 - dist_to_lattice(theta[:, 0] - theta[:, 1] + theta[:, 2] - theta[:, 3]) ** 2 / 4.0,
    )
    return [two_term, four_term]


def _ratio_deviations(
    q: np.ndarray, r: np.ndarray, n: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    # Logarithms keep (1 - q + r)^n and exp(-n q) representable for large n.
    log_ratio: np.ndarray = n * np.log(1.0 - q + r) + n * q
    forward: np.ndarray = np.abs(1.0 - np.exp(log_ratio))
    backward: np.ndarray = np.abs(1.0 - np.exp(-log_ratio))
    return forward, backward


def check_exp_nq(
    sample_count: int, rng: np.random.Generator, variant: str = "complex", max_n: int = 10_000
) -> ViolationReport:
    """
    Checks that (1 - Q + R)^n and exp(-n Q) are close in ratio.

    The complex variant draws real Q and complex R with Q^2, |R| <= 1/(100 n)
    and bounds both ratio deviations by 40 n (Q^2 + |R|); the real variant
    draws real R with Q^2, |R| <= 1/(4 n) and uses 4 n (Q^2 + |R|).
    """
    if variant not in ("complex", "real"):
        raise ValueError(f"Unknown variant {variant!r}")
    complex_variant: bool = "complex" == variant
    limit_factor: float = 100.0 if complex_variant else 4.0
    constant: float = 40.0 if complex_variant else 4.0

    n: np.ndarray = rng.integers(1, max_n + 1, size=sample_count).astype(np.float64)
    limit: np.ndarray = 1.0 / (limit_factor * n)
    # Magnitudes spread over several decades so both tiny and boundary cases occur.
    spread: np.ndarray = 10.0 ** rng.uniform(-6.0, 0.0, size=(2, sample_count))
    q: np.ndarray = np.sqrt(limit * spread[0]) * rng.choice([-1.0, 1.0], size=sample_count)
    r_abs: np.ndarray = limit * spread[1]
    r: np.ndarray
    if complex_variant:
        angle: np.ndarray = rng.uniform(0.0, 2.0 * np.pi, size=sample_count)
        r = r_abs * np.exp(1j * angle)
    else:
        r = r_abs * rng.choice([-1.0, 1.0], size=sample_count)
    forward, backward = _ratio_deviations(q.astype(np.complex128), r.astype(np.complex128), n)
    bound: np.ndarray = constant * n * (q * q + r_abs)
    report: ViolationReport = ViolationReport(f"exp_nq_{variant}")
    report.record(np.maximum(forward, backward), bound)
    return report


def _wide_sum_density(n: int) -> Tuple[Any, np.ndarray]:
    """
    Density of the sum of n symmetric-interval uniforms, with the breakpoints
    at which it loses smoothness.
    """
    if n <= MAX_EXACT_N:
        density = exact_density(n)
        return density, density.breakpoints
    return EdgeworthDensity(n, 4).of_sum, np.array([0.0])


def density_bounds_report(n: int, epsilons: Optional[List[float]] = None) -> Dict[str, Any]:
    """
    Densities at the centre of the n-fold sums of rolls on [0, n] and of their
    Gaussian surrogates, with the lower bound 1/(4 n sqrt(n)), the probability
    lower bound Pr[|V*n - n^2/2| <= eps] >= eps/(4 n sqrt(n)) and the upper
    bound u(0) <= 1/n behind Pr[e1 <= V*n <= e2] <= (e2 - e1)/n.

    The exact density is used for n <= 40 and the order-4 expansion beyond.
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    n_root_n: float = n * math.sqrt(n)
    lower: float = 1.0 / (4.0 * n_root_n)
    # V - n/2 = (n / (2 sqrt 3)) times a symmetric-interval uniform.
    scale: float = n / (2.0 * SQRT3)
    density, breakpoints = _wide_sum_density(n)
    u0: float = float(density(0.0)) / scale
    g0: float = 1.0 / math.sqrt(2.0 * math.pi * n**3 / 12.0)

    if None is epsilons:
        epsilons = [fraction * n_root_n for fraction in (0.01, 0.1, 0.5, 1.0)]
    windows: List[Dict[str, float]] = []
    for epsilon in epsilons:
        half: float = epsilon / scale
        inner: List[float] = [float(b) for b in breakpoints if 0.0 < b < half]
        mass, _ = integrate.quad(
            lambda s: float(density(s)), 0.0, half, points=inner or None, limit=200
        )
        probability: float = min(1.0, 2.0 * mass)
        windows.append(
            {
                "epsilon": epsilon,
                "probability": probability,
                "lower_bound": epsilon / (4.0 * n_root_n),
                "passed": probability >= epsilon / (4.0 * n_root_n),
            }
        )
    return {
        "n": n,
        "backend": "exact" if n <= MAX_EXACT_N else "edgeworth",
        "u0": u0,
        "g0": g0,
        "lower_bound": lower,
        "u0_passed": u0 >= lower,
        "g0_passed": g0 >= lower,
        "u0_upper_passed": u0 <= 1.0 / n,
        "windows": windows,
        "passed": all(w["passed"] for w in windows) and lower <= min(u0, g0) and u0 <= 1.0 / n,
    }
