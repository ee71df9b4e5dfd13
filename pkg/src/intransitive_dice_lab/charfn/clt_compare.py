import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from intransitive_dice_lab.dice_core.die import Die, draw_balanced_faces
from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.errors import (
    AttemptsExhausted,
    DegenerateMoments,
    IntervalMismatch,
    NotBalanced,
    OutOfRange,
)
from intransitive_dice_lab.gstats.g_moments import GMoments, g_values, moments_quadrature
from intransitive_dice_lab.mc_engine.accumulator import (
    Accumulator,
    EstimateReport,
    wilson_interval,
)
from intransitive_dice_lab.mc_engine.engine import MonteCarloEngine

logger: logging.Logger = logging.getLogger(__name__)

HALF_INTEGER_TOLERANCE: float = 1e-6
DEFAULT_TOLERANCE: float = 0.05
WINDOW_ATTEMPTS: int = 1_000_000


def gaussian_orthant(rho: float) -> float:
    """
    Probability that two standard Gaussians with correlation rho are both
    positive: 1/4 + arcsin(rho)/(2 pi).

    :raise OutOfRange: If rho lies outside [-1, 1].
    """
    if not -1.0 <= rho <= 1.0:
        raise OutOfRange(f"Correlation must lie in [-1, 1], got {rho}")
    if 1.0 == rho:
        return 0.5
    if -1.0 == rho:
        return 0.0
    return 0.25 + math.asin(rho) / (2.0 * math.pi)


@dataclass(frozen=True)
class OrthantCheck:
    rho: float
    exact: float
    estimate: EstimateReport
    z_score: float

    @property
    def within(self) -> bool:
        return abs(self.z_score) <= 4.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rho": self.rho,
            "exact": self.exact,
            "estimate": self.estimate.to_dict(),
            "z_score": self.z_score,
            "within": self.within,
        }


def orthant_monte_carlo(rho: float, samples: int, rng: np.random.Generator) -> OrthantCheck:
    """
    Compares `gaussian_orthant` with the positive-orthant frequency of
    `samples` correlated Gaussian pairs.
    """
    exact: float = gaussian_orthant(rho)
    first: np.ndarray = rng.standard_normal(samples)
    second: np.ndarray = rho * first + math.sqrt(1.0 - rho * rho) * rng.standard_normal(samples)
    hits: int = int(np.count_nonzero((first > 0.0) & (second > 0.0)))
    estimate: EstimateReport = wilson_interval(hits, samples)
    se: float = math.sqrt(exact * (1.0 - exact) / samples)
    z_score: float = (estimate.point - exact) / se if se > 0.0 else 0.0
    return OrthantCheck(rho=rho, exact=exact, estimate=estimate, z_score=z_score)


@dataclass(frozen=True)
class ConditionedRollTrial:
    """
    Draws n rolls conditioned on their sum and tests whether both centred
    counting sums are positive.

    With `window` None the rolls are conditioned exactly on the sum n(z1 + z2)/2
    by the balanced rejection sampler; otherwise iid rolls are accepted when
    their sum lies within `window` of it.
    """

    first: Die
    second: Die
    window: Optional[float] = None

    def _rolls(self, rng: np.random.Generator) -> np.ndarray:
        spec: IntervalSpec = self.first.spec
        if None is self.window:
            return draw_balanced_faces(spec, rng)[0]
        for _ in range(WINDOW_ATTEMPTS):
            rolls: np.ndarray = rng.uniform(spec.z1, spec.z2, size=spec.n)
            if abs(math.fsum(rolls) - spec.balance_target) <= self.window:
                return rolls
        raise AttemptsExhausted(WINDOW_ATTEMPTS, spec.n)

    def __call__(self, rng: np.random.Generator, trial_index: int) -> Dict[str, float]:
        rolls: np.ndarray = self._rolls(rng)
        sum_a: float = math.fsum(g_values(self.first, rolls))
        sum_b: float = math.fsum(g_values(self.second, rolls))
        observation: Dict[str, float] = {
            "both_positive": float(sum_a > 0.0 and sum_b > 0.0),
            "a_positive": float(sum_a > 0.0),
        }
        if None is self.window and 1 == self.first.n % 2:
            off_a: float = abs(sum_a - math.floor(sum_a) - 0.5)
            off_b: float = abs(sum_b - math.floor(sum_b) - 0.5)
            observation["half_integer_misses"] = float(
                off_a > HALF_INTEGER_TOLERANCE or off_b > HALF_INTEGER_TOLERANCE
            )
        return observation


@dataclass(frozen=True)
class CltComparison:
    """
    Conditional probability that both counting sums are positive, estimated
    by simulation, next to the orthant probability of the conditioned
    Gaussian surrogate.
    """

    n: int
    trials: int
    rho_cond: float
    gaussian: float
    estimate: EstimateReport
    difference: float
    se: float
    a_positive: float
    half_integer_misses: int
    window: Optional[float]
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def within_tolerance(self) -> bool:
        return abs(self.difference) <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "trials": self.trials,
            "rho_cond": self.rho_cond,
            "gaussian": self.gaussian,
            "estimate": self.estimate.to_dict(),
            "difference": self.difference,
            "se": self.se,
            "a_positive": self.a_positive,
            "half_integer_misses": self.half_integer_misses,
            "window": self.window,
            "tolerance": self.tolerance,
            "tolerance_is_calibrated": True,
            "within_tolerance": self.within_tolerance,
        }


def conditional_clt_compare(
    first: Die,
    second: Die,
    trials: int,
    seed: int,
    workers: int = 1,
    engine: Optional[MonteCarloEngine] = None,
    window: Optional[float] = None,
    moments: Optional[GMoments] = None,
) -> CltComparison:
    """
    :param window: If set, condition on |sum of rolls - target| <= window
        instead of the exact sum.
    :param moments: Moments of the pair, computed by quadrature if None.
    :raise IntervalMismatch: If the dice live on different intervals.
    :raise NotBalanced: If a die is not balanced.
    :raise DegenerateMoments: If a conditional variance is not positive.
    """
    if not first.spec.same_interval(second.spec) or first.n != second.n:
        raise IntervalMismatch("Both dice must share the interval and face count.")
    for die in (first, second):
        if not die.is_balanced:
            raise NotBalanced(f"{die} is not balanced.")
    if None is moments:
        moments = moments_quadrature(first, second)
    # Conditional variances are of order n; smaller values are rounding noise.
    tolerance: float = 1e-9 * first.n
    if moments.var_a_cond <= tolerance or moments.var_b_cond <= tolerance:
        raise DegenerateMoments(
            f"Conditional variances {moments.var_a_cond}, {moments.var_b_cond} are not positive."
        )

    runner: MonteCarloEngine = (
        engine if None is not engine else MonteCarloEngine(workers, seed, logger)
    )
    results: Dict[str, Accumulator] = runner.run(
        ConditionedRollTrial(first, second, window), trials, label=f"cltcompare n={first.n}"
    )
    hits: int = int(round(results["both_positive"].total))
    estimate: EstimateReport = wilson_interval(hits, trials)
    gaussian: float = gaussian_orthant(moments.rho_cond)
    misses: int = (
        int(round(results["half_integer_misses"].total))
        if "half_integer_misses" in results
        else 0
    )
    if misses > 0:
        logger.error(f"{misses} conditioned roll sums were not half-integers at n={first.n}.")
    return CltComparison(
        n=first.n,
        trials=trials,
        rho_cond=moments.rho_cond,
        gaussian=gaussian,
        estimate=estimate,
        difference=estimate.point - gaussian,
        se=estimate.se,
        a_positive=results["a_positive"].mean,
        half_integer_misses=misses,
        window=window,
    )


ORTHANT_RHOS: Tuple[float, ...] = (-0.9, -0.5, 0.0, 0.5, 0.9)


def orthant_report(
    samples: int, rng: np.random.Generator, grid_points: int = 101
) -> Dict[str, Any]:
    """
    Exact values at rho in {-1, 0, 1}, strict monotonicity on a grid over
    [-1, 1] and Monte Carlo agreement at a few correlations.
    """
    grid: np.ndarray = np.linspace(-1.0, 1.0, grid_points)
    values: np.ndarray = np.array([gaussian_orthant(float(rho)) for rho in grid])
    exact_points: bool = (
        0.25 == gaussian_orthant(0.0)
        and 0.5 == gaussian_orthant(1.0)
        and 0.0 == gaussian_orthant(-1.0)
    )
    monotone: bool = bool(np.all(np.diff(values) > 0.0))
    checks: List[OrthantCheck] = [orthant_monte_carlo(rho, samples, rng) for rho in ORTHANT_RHOS]
    return {
        "exact_points": exact_points,
        "monotone": monotone,
        "grid_points": grid_points,
        "monte_carlo": [check.to_dict() for check in checks],
        "passed": exact_points and monotone and all(check.within for check in checks),
    }
