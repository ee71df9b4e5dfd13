import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from intransitive_dice_lab.charfn.bounds import (
    ViolationReport,
    check_exp_nq,
    check_face_perturbation,
    check_large_gamma,
    check_lipschitz,
    check_qr_remainder,
)
from intransitive_dice_lab.charfn.clt_compare import (
    HALF_INTEGER_TOLERANCE,
    CltComparison,
    conditional_clt_compare,
    orthant_report,
)
from intransitive_dice_lab.cli_io.config import ExperimentConfig
from intransitive_dice_lab.cli_io.experiments import (
    ExperimentResult,
    conditional_agreement,
    correction_discrepancy,
    density_errors,
    four_line_gap,
)
from intransitive_dice_lab.cli_io.report import ReportEnvelope
from intransitive_dice_lab.dice_core.die import (
    BeatsOutcome,
    Die,
    beats_fast,
    beats_naive,
    draw_balanced_faces,
    efron_dice,
    sample_balanced,
)
from intransitive_dice_lab.dice_core.interval import SQRT3, IntervalSpec
from intransitive_dice_lab.edgeworth.correction import conditional_expect
from intransitive_dice_lab.edgeworth.simple_integrals import simple_integrals_table
from intransitive_dice_lab.errors import DegenerateMoments
from intransitive_dice_lab.gstats.g_moments import (
    GMoments,
    balanced_moment_asymptotics,
    g_values,
    moments_closed_form,
    moments_quadrature,
    sup_norm_g,
)
from intransitive_dice_lab.gstats.sampling import sample_moment_statistics
from intransitive_dice_lab.mc_engine.accumulator import Accumulator
from intransitive_dice_lab.mc_engine.engine import MonteCarloEngine, RngStream, derive_seed
from intransitive_dice_lab.tournaments.classify import Tournament3Class, Tournament4Class
from intransitive_dice_lab.tournaments.estimators import (
    NestedSummary,
    TournamentEstimate,
    estimate_nested_X,
    estimate_nested_Y,
    estimate_tournament3,
    estimate_tournament4,
)

CRITERIA: Sequence[int] = tuple(range(1, 14))
EFRON_MARGIN: int = 12
MIN_SCALED_COUNT: int = 10
CLT_PAIR_ATTEMPTS: int = 1000
SPEEDUP_WORKERS: int = 8
MOMENT_SCALE_FLOOR: float = 1e-12


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "wall_time": self.wall_time,
            "details": self.details,
        }


@dataclass(frozen=True)
class SupNormTrial:
    spec: IntervalSpec

    def __call__(self, rng: np.random.Generator, trial_index: int) -> Dict[str, float]:
        n: int = self.spec.n
        sup: float = sup_norm_g(sample_balanced(self.spec, rng))
        return {"sup_a": sup, "exceeds": float(sup >= 5.0 * math.sqrt(n * math.log(n)))}


@dataclass(frozen=True)
class HalfIntegerTrial:
    """
    For odd n, the sum of g_A over rolls conditioned on the face-sum is a
    half-integer.
    """

    spec: IntervalSpec

    def __call__(self, rng: np.random.Generator, trial_index: int) -> Dict[str, float]:
        die: Die = sample_balanced(self.spec, rng)
        rolls: np.ndarray = draw_balanced_faces(self.spec, rng)[0]
        total: float = math.fsum(g_values(die, rolls))
        offset: float = abs(total - math.floor(total) - 0.5)
        return {"offset": offset, "miss": float(offset > HALF_INTEGER_TOLERANCE)}


def _combined_overlap(first: float, first_se: float, second: float, second_se: float) -> bool:
    """
    True when the two 95% confidence intervals overlap.
    """
    return abs(first - second) <= 1.96 * (first_se + second_se)


def moments_relative_difference(first: Die, second: Die) -> float:
    """
    :return: The largest relative difference between the closed-form and the
        quadrature moments of a balanced symmetric pair, over all fields.
    """
    closed: Dict[str, float] = moments_closed_form(first, second).to_dict()
    quadrature: Dict[str, float] = moments_quadrature(first, second).to_dict()
    worst: float = 0.0
    for key, value in closed.items():
        scale: float = max(abs(quadrature[key]), MOMENT_SCALE_FLOOR)
        worst = max(worst, abs(value - quadrature[key]) / scale)
    return worst


class AcceptanceSuite:
    """
    Runs the acceptance criteria. Trial counts are multiplied by `scale`; a
    scale below one gives a quick smoke run whose statistical verdicts are
    weaker than at full size.
    """

    def __init__(self, config: ExperimentConfig, logger: logging.Logger):
        self._logger: logging.Logger = logger
        self.__config: ExperimentConfig = config
        self.__scale: float = config.scale
        self.__tournament4: Optional[TournamentEstimate] = None
        self.__checks: Dict[int, Callable[[], CriterionResult]] = {
            1: self.efron_cycle,
            2: self.three_dice_uniformity,
            3: self.non_quasirandomness,
            4: self.reduction_identities,
            5: self.moment_asymptotics,
            6: self.simple_integrals,
            7: self.expectation_spot_checks,
            8: self.edgeworth_convergence,
            9: self.characteristic_function_bounds,
            10: self.sup_norm_and_half_integrality,
            11: self.orthant_probabilities,
            12: self.conditional_clt,
            13: self.engineering,
        }

    def _count(self, base: int) -> int:
        return max(MIN_SCALED_COUNT, int(round(base * self.__scale)))

    def _engine(self, number: int, workers: Optional[int] = None) -> MonteCarloEngine:
        return MonteCarloEngine(
            self.__config.workers if None is workers else workers,
            derive_seed(self.__config.seed, number),
            self._logger,
        )

    def _rng(self, number: int) -> np.random.Generator:
        return RngStream(derive_seed(self.__config.seed, number), 0).generator()

    def run(self, numbers: Sequence[int]) -> List[CriterionResult]:
        selected: Sequence[int] = numbers if numbers else CRITERIA
        unknown: List[int] = [number for number in selected if number not in self.__checks]
        if unknown:
            raise ValueError(f"Unknown acceptance criteria {unknown}, expected 1..13")
        results: List[CriterionResult] = []
        for number in selected:
            start_time: float = time.perf_counter()
            result: CriterionResult = self.__checks[number]()
            result.wall_time = time.perf_counter() - start_time
            if result.passed:
                self._logger.info(f"Criterion {number} ({result.title}) passed.")
            else:
                self._logger.error(f"Criterion {number} ({result.title}) failed: {result.details}")
            results.append(result)
        return results

    def efron_cycle(self) -> CriterionResult:
        dice: Sequence[Die] = efron_dice()
        margins: List[int] = []
        agree: bool = True
        for index in range(4):
            first: Die = dice[index]
            second: Die = dice[(index + 1) % 4]
            naive: BeatsOutcome = beats_naive(first, second)
            fast: BeatsOutcome = beats_fast(first, second)
            agree = agree and naive.margin == fast.margin
            margins.append(naive.margin)
        return CriterionResult(
            1,
            "Efron cycle",
            agree and all(EFRON_MARGIN == margin for margin in margins),
            {"margins": margins, "expected_margin": EFRON_MARGIN, "fast_matches_naive": agree},
        )

    def three_dice_uniformity(self) -> CriterionResult:
        n: int = 201
        estimate: TournamentEstimate = estimate_tournament3(
            IntervalSpec.symmetric(n), self._count(200_000), 0, engine=self._engine(2)
        )
        cycle: str = Tournament3Class.Cycle.value
        distance: float = abs(estimate.probabilities[cycle] - 0.25)
        tolerance: float = 4.0 * estimate.standard_errors[cycle] + 0.02
        return CriterionResult(
            2,
            "Three-dice uniformity",
            distance <= tolerance,
            {
                "p_cycle": estimate.probabilities[cycle],
                "se": estimate.standard_errors[cycle],
                "tolerance": tolerance,
            },
        )

    def _four_dice(self) -> TournamentEstimate:
        if None is self.__tournament4:
            self.__tournament4 = estimate_tournament4(
                IntervalSpec.symmetric(101), self._count(100_000), 0, engine=self._engine(3)
            )
        return self.__tournament4

    def non_quasirandomness(self) -> CriterionResult:
        estimate: TournamentEstimate = self._four_dice()
        line: str = Tournament4Class.Transitive.value
        p_line: float = estimate.probabilities[line]
        se: float = estimate.standard_errors[line]
        gap, gap_se = four_line_gap(estimate)
        excess: bool = p_line - 0.375 >= 3.0 * se
        in_range: bool = 0.37 <= p_line <= 0.41
        matches_square: bool = abs(gap) <= 4.0 * gap_se + 0.02
        return CriterionResult(
            3,
            "Non-quasirandomness",
            excess and in_range and matches_square,
            {
                "p_four_line": p_line,
                "se": se,
                "excess_over_3se": excess,
                "in_range": in_range,
                "line_minus_four_cycle": gap,
                "line_minus_four_cycle_se": gap_se,
            },
        )

    def reduction_identities(self) -> CriterionResult:
        spec: IntervalSpec = IntervalSpec.symmetric(101)
        outer: int = self._count(2000)
        inner: int = 500
        nested_y: NestedSummary = estimate_nested_Y(
            spec, outer, inner, 0, engine=self._engine(4)
        )
        nested_x: NestedSummary = estimate_nested_X(
            spec, outer, inner, 0, engine=self._engine(40)
        )
        four: TournamentEstimate = self._four_dice()
        three: TournamentEstimate = estimate_tournament3(
            spec, self._count(100_000), 0, engine=self._engine(41)
        )
        line4: str = Tournament4Class.Transitive.value
        line3: str = Tournament3Class.Transitive.value
        y_matches: bool = _combined_overlap(
            6.0 * nested_y.second_moment,
            6.0 * nested_y.second_moment_se,
            four.probabilities[line4],
            four.standard_errors[line4],
        )
        x_matches: bool = _combined_overlap(
            3.0 * nested_x.second_moment,
            3.0 * nested_x.second_moment_se,
            three.probabilities[line3],
            three.standard_errors[line3],
        )
        return CriterionResult(
            4,
            "Reduction identities",
            y_matches and x_matches,
            {
                "six_second_moment_y": 6.0 * nested_y.second_moment,
                "p_four_line": four.probabilities[line4],
                "three_second_moment_x": 3.0 * nested_x.second_moment,
                "p_three_line": three.probabilities[line3],
                "y_matches": y_matches,
                "x_matches": x_matches,
            },
        )

    def moment_asymptotics(self) -> CriterionResult:
        count: int = self._count(10_000)
        statistics: Dict[int, Dict[str, Accumulator]] = {
            n: sample_moment_statistics(IntervalSpec.symmetric(n), count, self._engine(5 + 100 * n))
            for n in (250, 500, 1000)
        }
        at_1000: Dict[str, float] = balanced_moment_asymptotics(1000)
        at_500: Dict[str, float] = balanced_moment_asymptotics(500)
        var_a_error: float = statistics[1000]["var_a"].mean / at_1000["var_a"] - 1.0
        cv_a_error: float = statistics[1000]["cv_a_sq"].mean / at_1000["cv_a_sq"] - 1.0
        cv_ab_error: float = statistics[500]["cv_ab_sq"].mean / at_500["cv_ab_sq"] - 1.0
        ratios: Dict[str, float] = {
            str(n): statistics[n]["var_a_sq"].mean / (n * n) for n in statistics
        }
        spread: float = max(ratios.values()) / min(ratios.values())
        return CriterionResult(
            5,
            "Moment asymptotics",
            abs(var_a_error) <= 0.05
            and abs(cv_a_error) <= 0.05
            and abs(cv_ab_error) <= 0.10
            and spread < 2.0,
            {
                "var_a_relative_error": var_a_error,
                "cv_a_sq_relative_error": cv_a_error,
                "cv_ab_sq_relative_error": cv_ab_error,
                "var_a_sq_over_n_sq": ratios,
                "var_a_sq_spread": spread,
            },
        )

    def simple_integrals(self) -> CriterionResult:
        rows = simple_integrals_table()
        return CriterionResult(
            6,
            "Simple integrals",
            17 == len(rows) and all(row.passed for row in rows),
            {"rows": [row.to_dict() for row in rows]},
        )

    def expectation_spot_checks(self) -> CriterionResult:
        n: int = 50
        a1_sq: float = conditional_expect(lambda v: v[:, 0] ** 2, 1, n, layout=(1,))
        max_ab: float = conditional_expect(
            lambda v: np.maximum(v[:, 0], v[:, 1]), 2, n, layout=(1, 1)
        )
        a1_sq_target: float = 1.0 - 2.0 / (5 * n) - 18.0 / (175 * n * n)
        max_ab_target: float = SQRT3 / 3.0 * (1.0 - 1.0 / (5 * n) - 2.0 / (25 * n * n))
        closed_ok: bool = abs(a1_sq - a1_sq_target) <= 1e-4 and abs(max_ab - max_ab_target) <= 1e-4
        monte_carlo: Dict[str, Any] = conditional_agreement(
            n, self._count(10_000_000), self._engine(7)
        )
        return CriterionResult(
            7,
            "Conditional expectation spot checks",
            closed_ok and monte_carlo["passed"],
            {
                "a1_sq": a1_sq,
                "a1_sq_target": a1_sq_target,
                "max_a1_b1": max_ab,
                "max_a1_b1_target": max_ab_target,
                "monte_carlo": monte_carlo,
            },
        )

    def edgeworth_convergence(self) -> CriterionResult:
        errors: Dict[str, Dict[str, float]] = {}
        for n in (8, 16, 32):
            _, _, by_order = density_errors(n)
            errors[str(n)] = {str(order): value for order, value in by_order.items()}
        gain: float = errors["16"]["0"] / errors["16"]["2"]
        shrink: Dict[str, float] = {
            str(k): correction_discrepancy(15, k) / correction_discrepancy(30, k) for k in (1, 2)
        }
        return CriterionResult(
            8,
            "Edgeworth convergence",
            gain >= 10.0 and all(value >= 4.0 for value in shrink.values()),
            {"sup_errors": errors, "order_2_gain_n16": gain, "correction_shrink": shrink},
        )

    def characteristic_function_bounds(self) -> CriterionResult:
        rng: np.random.Generator = self._rng(9)
        spec: IntervalSpec = IntervalSpec.wide(101)
        merged: Dict[str, ViolationReport] = {}

        def _add(report: ViolationReport) -> None:
            if report.name in merged:
                merged[report.name].merge(report)
            else:
                merged[report.name] = report

        for _ in range(20):
            first: Die = sample_balanced(spec, rng)
            second: Die = sample_balanced(spec, rng)
            _add(check_large_gamma(first, second, 1000, rng))
            _add(check_lipschitz(first, second, 1000, rng))
            _add(check_face_perturbation(first, second, 1.0, 100, rng))
            for report in check_qr_remainder(first, second, 1000, rng):
                _add(report)
        for variant in ("complex", "real"):
            _add(check_exp_nq(10_000, rng, variant))
        return CriterionResult(
            9,
            "Characteristic-function bounds",
            all(report.passed for report in merged.values()),
            {name: report.to_dict() for name, report in sorted(merged.items())},
        )

    def sup_norm_and_half_integrality(self) -> CriterionResult:
        count: int = self._count(10_000)
        sup: Dict[str, Accumulator] = self._engine(10).run(
            SupNormTrial(IntervalSpec.symmetric(1000)), count, label="sup norm n=1000"
        )
        half: Dict[str, Accumulator] = self._engine(100).run(
            HalfIntegerTrial(IntervalSpec.symmetric(1001)), count, label="half-integers n=1001"
        )
        exceedances: int = int(round(sup["exceeds"].total))
        misses: int = int(round(half["miss"].total))
        return CriterionResult(
            10,
            "Sup norm and half-integrality",
            0 == exceedances and 0 == misses,
            {
                "sup_exceedances": exceedances,
                "sup_max": sup["sup_a"].max,
                "sup_limit": 5.0 * math.sqrt(1000 * math.log(1000)),
                "half_integer_misses": misses,
                "max_half_integer_offset": half["offset"].max,
            },
        )

    def orthant_probabilities(self) -> CriterionResult:
        report: Dict[str, Any] = orthant_report(self._count(100_000), self._rng(11))
        return CriterionResult(11, "Orthant probabilities", bool(report["passed"]), report)

    def conditional_clt(self) -> CriterionResult:
        n: int = 400
        spec: IntervalSpec = IntervalSpec.symmetric(n)
        rng: np.random.Generator = self._rng(12)
        comparisons: List[CltComparison] = []
        for index in range(10):
            for _ in range(CLT_PAIR_ATTEMPTS):
                first: Die = sample_balanced(spec, rng)
                second: Die = sample_balanced(spec, rng)
                moments: GMoments = moments_quadrature(first, second)
                if min(moments.var_a_cond, moments.var_b_cond) >= 0.01 * n:
                    break
            else:
                raise DegenerateMoments(
                    f"No pair with conditional variances >= {0.01 * n} in"
                    f" {CLT_PAIR_ATTEMPTS} draws."
                )
            engine: MonteCarloEngine = self._engine(1200 + index)
            comparisons.append(
                conditional_clt_compare(
                    first, second, self._count(100_000), engine.seed, engine=engine, moments=moments
                )
            )
        within: int = sum(1 for comparison in comparisons if comparison.within_tolerance)
        return CriterionResult(
            12,
            "Conditional CLT discrepancy",
            within >= 9,
            {"within": within, "comparisons": [c.to_dict() for c in comparisons]},
        )

    def tournament3_payload(self) -> str:
        """
        :return: The serialized payload of a fixed small tournament3 run,
            which must be byte-identical across runs.
        """
        small: IntervalSpec = IntervalSpec.symmetric(51)
        estimate: TournamentEstimate = estimate_tournament3(
            small, self._count(2000), 0, engine=self._engine(13)
        )
        return ReportEnvelope(
            config=self.__config.to_dict(), results=estimate.to_dict()
        ).payload_json()

    def engineering(self) -> CriterionResult:
        rng: np.random.Generator = self._rng(13)
        mismatches: int = 0
        for _ in range(1000):
            n: int = int(rng.integers(3, 61))
            spec: IntervalSpec = IntervalSpec.symmetric(n)
            first: Die = sample_balanced(spec, rng)
            second: Die = sample_balanced(spec, rng)
            if beats_naive(first, second).margin != beats_fast(first, second).margin:
                mismatches += 1

        worst: float = 0.0
        for _ in range(100):
            spec = IntervalSpec.symmetric(int(rng.integers(5, 200)))
            first = sample_balanced(spec, rng)
            second = sample_balanced(spec, rng)
            worst = max(worst, moments_relative_difference(first, second))

        deterministic: bool = self.tournament3_payload() == self.tournament3_payload()

        details: Dict[str, Any] = {
            "beats_mismatches": mismatches,
            "moments_max_relative_difference": worst,
            "deterministic": deterministic,
        }
        speedup_ok: bool = True
        cpus: int = os.cpu_count() or 1
        if cpus >= SPEEDUP_WORKERS:
            timings: Dict[int, float] = {}
            for workers in (1, SPEEDUP_WORKERS):
                start_time: float = time.perf_counter()
                estimate_tournament4(
                    IntervalSpec.symmetric(101),
                    self._count(100_000),
                    0,
                    engine=self._engine(130, workers),
                )
                timings[workers] = time.perf_counter() - start_time
            speedup: float = timings[1] / timings[SPEEDUP_WORKERS]
            speedup_ok = speedup >= 4.0
            details["speedup"] = speedup
        else:
            self._logger.warning(
                f"Only {cpus} CPUs; skipping the {SPEEDUP_WORKERS}-worker speedup check."
            )
            details["speedup"] = None
        return CriterionResult(
            13,
            "Engineering",
            0 == mismatches and worst <= 1e-6 and deterministic and speedup_ok,
            details,
        )


def run_acceptance(config: ExperimentConfig, logger: logging.Logger) -> ExperimentResult:
    suite: AcceptanceSuite = AcceptanceSuite(config, logger)
    results: List[CriterionResult] = suite.run(config.criteria)
    failed: List[int] = [result.number for result in results if not result.passed]
    return ExperimentResult(
        {
            "scale": config.scale,
            "criteria": [result.to_dict() for result in results],
            "failed": failed,
        },
        0 == len(failed),
    )
