import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

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
    decay_grid,
    density_bounds_report,
)
from intransitive_dice_lab.charfn.clt_compare import (
    CltComparison,
    conditional_clt_compare,
    orthant_report,
)
from intransitive_dice_lab.cli_io.config import CHARFN_CHECKS, ExperimentConfig
from intransitive_dice_lab.dice_core.die import Die, draw_balanced_faces, sample_balanced
from intransitive_dice_lab.dice_core.interval import SQRT3, IntervalSpec
from intransitive_dice_lab.edgeworth.correction import (
    conditional_expect,
    correction_factor_closed,
    correction_factor_direct,
    expectation_table,
    max_closed_order,
)
from intransitive_dice_lab.edgeworth.expansion import SUPPORTED_ORDERS, edgeworth_density
from intransitive_dice_lab.edgeworth.irwin_hall import irwin_hall_density
from intransitive_dice_lab.edgeworth.simple_integrals import simple_integrals_table
from intransitive_dice_lab.gstats.g_moments import (
    GMoments,
    balanced_moment_asymptotics,
    iid_moment_expectations,
    moments_quadrature,
)
from intransitive_dice_lab.gstats.sampling import MOMENT_STATISTICS, sample_moment_statistics
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

INTERPOLATION_EPSILON: float = 1.0
INTERPOLATION_SAMPLES: int = 1000


@dataclass
class ExperimentResult:
    """
    Outcome of one subcommand. `passed` is None when the subcommand checks no
    threshold; plot rows are written only when --plot-data is given.
    """

    results: Dict[str, Any]
    passed: Optional[bool] = None
    plot_rows: List[Sequence[float]] = field(default_factory=list)
    plot_columns: Tuple[str, ...] = ("x", "y")


Experiment = Callable[[ExperimentConfig, logging.Logger], ExperimentResult]


def _engine(config: ExperimentConfig, logger: logging.Logger) -> MonteCarloEngine:
    return MonteCarloEngine(config.workers, config.seed, logger)


def _summary(accumulator: Accumulator) -> Dict[str, Any]:
    return {**accumulator.to_dict(), "estimate": accumulator.estimate().to_dict()}


def expected_a1_sq(n: int) -> float:
    """
    E[a_1^2] for a balanced die on the symmetric interval, to order 1/n^2.
    """
    return 1.0 - 2.0 / (5.0 * n) - 18.0 / (175.0 * n * n)


@dataclass(frozen=True)
class SamplerTrial:
    """
    Draws one die and records sampler cost and moment diagnostics.
    """

    spec: IntervalSpec
    balanced: bool

    def __call__(self, rng: np.random.Generator, trial_index: int) -> Dict[str, float]:
        spec: IntervalSpec = self.spec
        attempts: int = 1
        faces: np.ndarray
        if self.balanced:
            faces, attempts = draw_balanced_faces(spec, rng)
        else:
            faces = rng.uniform(spec.z1, spec.z2, size=spec.n)
        die: Die = Die(faces, spec, is_balanced=self.balanced)
        moments: GMoments = moments_quadrature(die, die)
        mean_u: float = math.fsum(spec.z2 - faces) / spec.length - spec.n / 2.0
        standardized: float = (faces[0] - (spec.z1 + spec.z2) / 2.0) * 2.0 * SQRT3 / spec.length
        return {
            "attempts": float(attempts),
            "var_a": moments.var_a,
            "second_moment": moments.var_a + mean_u * mean_u,
            "a1_sq": standardized * standardized,
            "sup_a": moments.sup_a,
        }


def run_sample(config: ExperimentConfig, logger: logging.Logger) -> ExperimentResult:
    spec: IntervalSpec = config.interval_spec()
    balanced: bool = "balanced" == config.kind
    results: Dict[str, Accumulator] = _engine(config, logger).run(
        SamplerTrial(spec, balanced), config.trials, label=f"sample {config.kind} n={spec.n}"
    )
    report: Dict[str, Any] = {
        "interval": spec.describe(),
        "kind": config.kind,
        "statistics": {key: _summary(value) for key, value in sorted(results.items())},
    }
    passed: bool
    if balanced:
        rate: float = config.trials / results["attempts"].total
        lower: float = 1.0 / (5.0 * math.sqrt(spec.n))
        report["acceptance_rate"] = rate
        report["acceptance_lower_bound"] = lower
        report["expected"] = {
            **balanced_moment_asymptotics(spec.n),
            "a1_sq": expected_a1_sq(spec.n),
        }
        passed = rate >= lower
    else:
        expected: Dict[str, float] = iid_moment_expectations(spec.n)
        second: Accumulator = results["second_moment"]
        report["expected"] = expected
        passed = abs(second.mean - expected["second_moment"]) <= 4.0 * second.sem()
    return ExperimentResult(report, passed)


def run_tournament3(config: ExperimentConfig, logger: logging.Logger) -> ExperimentResult:
    estimate: TournamentEstimate = estimate_tournament3(
        config.interval_spec(), config.trials, config.seed, engine=_engine(config, logger)
    )
    cycle: str = Tournament3Class.Cycle.value
    distance: float = abs(estimate.probabilities[cycle] - 0.25)
    tolerance: float = 4.0 * estimate.standard_errors[cycle] + 0.02
    return ExperimentResult(
        {
            "estimate": estimate.to_dict(),
            "cycle_target": 0.25,
            "cycle_distance": distance,
            "cycle_tolerance": tolerance,
        },
        distance <= tolerance,
    )


def four_line_gap(estimate: TournamentEstimate) -> Tuple[float, float]:
    """
    :return: P_4line - P_4cycle and the standard error of that difference
        of two multinomial frequencies.
    """
    line: float = estimate.probabilities[Tournament4Class.Transitive.value]
    square: float = estimate.probabilities[Tournament4Class.FourCycle.value]
    effective: int = max(1, estimate.trials - estimate.degenerate)
    gap: float = line - square
    return gap, math.sqrt(max(0.0, line + square - gap * gap) / effective)


def run_tournament4(config: ExperimentConfig, logger: logging.Logger) -> ExperimentResult:
    sizes: List[int] = sorted(config.n_sweep) if config.n_sweep else [config.n]
    spec: IntervalSpec = config.interval_spec()
    estimates: Dict[str, Any] = {}
    rows: List[Sequence[float]] = []
    passed: bool = True
    line: str = Tournament4Class.Transitive.value
    for index, n in enumerate(sizes):
        seed: int = config.seed if 1 == len(sizes) else derive_seed(config.seed, index)
        engine: MonteCarloEngine = MonteCarloEngine(config.workers, seed, logger)
        estimate: TournamentEstimate = estimate_tournament4(
            spec.with_n(n), config.trials, seed, engine=engine
        )
        gap, gap_se = four_line_gap(estimate)
        within: bool = abs(gap) <= 4.0 * gap_se + 0.02
        passed = passed and within
        estimates[str(n)] = {
            **estimate.to_dict(),
            "four_line_excess": estimate.probabilities[line] - 0.375,
            "line_minus_four_cycle": gap,
            "line_minus_four_cycle_se": gap_se,
            "line_matches_four_cycle": within,
        }
        rows.append((float(n), estimate.probabilities[line], estimate.standard_errors[line]))
    return ExperimentResult(
        {"quasirandom_line": 0.375, "estimates": estimates},
        passed,
        plot_rows=rows,
        plot_columns=("n", "p_four_line", "se"),
    )


def run_moments(config: ExperimentConfig, logger: logging.Logger) -> ExperimentResult:
    spec: IntervalSpec = config.interval_spec()
    results: Dict[str, Accumulator] = sample_moment_statistics(
        spec, config.trials, _engine(config, logger)
    )
    names: Sequence[str] = MOMENT_STATISTICS if "all" == config.stat else (config.stat,)
    asymptotics: Dict[str, float] = balanced_moment_asymptotics(spec.n)
    statistics: Dict[str, Any] = {}
    for name in names:
        entry: Dict[str, Any] = _summary(results[name])
        if name in asymptotics:
            entry["asymptotic"] = asymptotics[name]
            entry["relative_error"] = results[name].mean / asymptotics[name] - 1.0
        statistics[name] = entry
    exceedances: int = int(round(results["sup_exceeds"].total))
    if exceedances > 0:
        logger.error(f"{exceedances} dice exceeded the sup-norm bound 5 sqrt(n log n).")
    return ExperimentResult(
        {
            "interval": spec.describe(),
            "statistics": statistics,
            "var_a_sq_over_n_sq": results["var_a_sq"].mean / (spec.n * spec.n),
            "sup_exceedances": exceedances,
        },
        0 == exceedances,
    )


def nested_scale(quantity: str) -> float:
    """
    :return: 3 for X, since P_3line = 3 E[X^2], and 6 for Y, since
        P_4line = 6 E[Y^2].
    """
    return 3.0 if "X" == quantity else 6.0


def run_nested(config: ExperimentConfig, logger: logging.Logger) -> ExperimentResult:
    spec: IntervalSpec = config.interval_spec()
    estimator = estimate_nested_X if "X" == config.quantity else estimate_nested_Y
    summary: NestedSummary = estimator(
        spec, config.outer, config.inner, config.seed, engine=_engine(config, logger)
    )
    scale: float = nested_scale(config.quantity)
    return ExperimentResult(
        {
            "quantity": config.quantity,
            "summary": summary.to_dict(),
            "scale": scale,
            "scaled_second_moment": scale * summary.second_moment,
            "scaled_second_moment_se": scale * summary.second_moment_se,
        }
    )


def density_errors(n: int, points: int = 601) -> Tuple[np.ndarray, np.ndarray, Dict[int, float]]:
    """
    Compares the normalized expansion with the exact density on |x| <= 3.

    :return: The grid, the exact normalized density and the sup error per order.
    """
    x: np.ndarray = np.linspace(-3.0, 3.0, points)
    root: float = math.sqrt(n)
    exact: np.ndarray = np.asarray(irwin_hall_density(n, x * root)) * root
    errors: Dict[int, float] = {
        order: float(np.max(np.abs(edgeworth_density(n, x, order) - exact)))
        for order in SUPPORTED_ORDERS
    }
    return x, exact, errors


def correction_discrepancy(n: int, k: int, points: int = 201) -> float:
    """
    Sup distance between the closed-form and the direct correction factor
    over the range of a k-face group sum.
    """
    x: np.ndarray = np.linspace(-k * SQRT3, k * SQRT3, points)
    closed: np.ndarray = np.asarray(correction_factor_closed(n, k, x))
    direct: np.ndarray = np.asarray(correction_factor_direct(n, k, x))
    return float(np.max(np.abs(closed - direct)))


@dataclass(frozen=True)
class ConditionalFaceTrial:
    spec: IntervalSpec

    def __call__(self, rng: np.random.Generator, trial_index: int) -> Dict[str, float]:
        first: np.ndarray = draw_balanced_faces(self.spec, rng)[0]
        second: np.ndarray = draw_balanced_faces(self.spec, rng)[0]
        return {
            "a1_sq": first[0] * first[0],
            "max_a1_b1": max(first[0], second[0]),
            "max_a1_a2": max(first[0], first[1]),
        }


CONDITIONAL_TARGETS: Dict[str, Tuple[int, Tuple[int, ...], Callable[[np.ndarray], np.ndarray]]] = {
    "a1_sq": (1, (1,), lambda v: v[:, 0] * v[:, 0]),
    "max_a1_b1": (2, (1, 1), lambda v: np.maximum(v[:, 0], v[:, 1])),
    "max_a1_a2": (2, (2,), lambda v: np.maximum(v[:, 0], v[:, 1])),
}


def conditional_agreement(
    n: int, trials: int, engine: MonteCarloEngine, sigmas: float = 3.0
) -> Dict[str, Any]:
    """
    Monte Carlo over balanced dice on the symmetric interval next to
    `conditional_expect` for a few face functions.
    """
    results: Dict[str, Accumulator] = engine.run(
        ConditionalFaceTrial(IntervalSpec.symmetric(n)), trials, label=f"conditional n={n}"
    )
    rows: Dict[str, Any] = {}
    for name, (k, layout, integrand) in CONDITIONAL_TARGETS.items():
        expected: float = conditional_expect(integrand, k, n, layout=layout, backend="auto")
        accumulator: Accumulator = results[name]
        difference: float = accumulator.mean - expected
        rows[name] = {
            "monte_carlo": accumulator.mean,
            "se": accumulator.sem(),
            "expected": expected,
            "difference": difference,
            "passed": abs(difference) <= sigmas * accumulator.sem() + 1e-12,
        }
    return {"rows": rows, "passed": all(row["passed"] for row in rows.values())}


def run_edgeworth(config: ExperimentConfig, logger: logging.Logger) -> ExperimentResult:
    check: str = config.check or "density"
    n: int = config.n
    if "density" == check:
        x, exact, errors = density_errors(n)
        approximation: np.ndarray = np.asarray(edgeworth_density(n, x, config.order))
        gain: float = errors[0] / errors[2] if errors[2] > 0.0 else math.inf
        return ExperimentResult(
            {
                "n": n,
                "sup_errors": {str(order): value for order, value in errors.items()},
                "order_2_gain": gain,
            },
            errors[2] < errors[0],
            plot_rows=[row for row in zip(x, approximation, exact)],
            plot_columns=("x", "edgeworth", "exact"),
        )
    if "correction" == check:
        order: int = max_closed_order(config.k)
        here: float = correction_discrepancy(n, config.k)
        doubled: float = correction_discrepancy(2 * n, config.k)
        shrink: float = here / doubled if doubled > 0.0 else math.inf
        # A discrepancy of order n^-(order+1) shrinks by 2^(order+1) when n doubles.
        required: float = 2.0 ** (order + 1) / 2.0
        return ExperimentResult(
            {
                "n": n,
                "k": config.k,
                "closed_order": order,
                "discrepancy": here,
                "discrepancy_doubled_n": doubled,
                "shrink_factor": shrink,
                "required_shrink": required,
            },
            shrink >= required,
        )
    if "simple-integrals" == check:
        integral_rows = simple_integrals_table()
        return ExperimentResult(
            {"rows": [row.to_dict() for row in integral_rows]},
            all(row.passed for row in integral_rows),
        )
    if "expectations" == check:
        expectation_rows = expectation_table(n)
        return ExperimentResult(
            {"n": n, "rows": [row.to_dict() for row in expectation_rows]},
            all(row.within for row in expectation_rows),
        )
    if "conditional" == check:
        report: Dict[str, Any] = conditional_agreement(n, config.trials, _engine(config, logger))
        return ExperimentResult({"n": n, **report}, report["passed"])
    raise ValueError(f"Unknown edgeworth check {check!r}")


PAIR_CHECKS: Tuple[str, ...] = (
    "large-gamma",
    "lipschitz",
    "interpolation",
    "refinement",
    "qr",
    "decay-box",
)


def _merge_into(merged: Dict[str, ViolationReport], report: ViolationReport) -> None:
    if report.name in merged:
        merged[report.name].merge(report)
    else:
        merged[report.name] = report


def run_charfn(config: ExperimentConfig, logger: logging.Logger) -> ExperimentResult:
    checks: List[str] = (
        [c for c in CHARFN_CHECKS if "all" != c]
        if config.check in (None, "all")
        else [str(config.check)]
    )
    rng: np.random.Generator = RngStream(config.seed, 0).generator()
    spec: IntervalSpec = IntervalSpec.wide(config.n)
    merged: Dict[str, ViolationReport] = {}
    decay: List[Dict[str, Any]] = []
    results: Dict[str, Any] = {"n": config.n, "pairs": config.pairs, "checks": checks}
    passed: bool = True

    if any(c in PAIR_CHECKS for c in checks):
        grid: Optional[np.ndarray] = (
            decay_grid(config.n, config.grid, config.gamma_max) if "decay-box" in checks else None
        )
        for _ in range(config.pairs):
            first: Die = sample_balanced(spec, rng)
            second: Die = sample_balanced(spec, rng)
            reports: List[ViolationReport] = []
            if "large-gamma" in checks:
                reports.append(check_large_gamma(first, second, config.trials, rng))
            if "lipschitz" in checks:
                reports.append(check_lipschitz(first, second, config.trials, rng))
            if "interpolation" in checks:
                reports.append(
                    check_face_perturbation(
                        first,
                        second,
                        INTERPOLATION_EPSILON,
                        min(config.trials, INTERPOLATION_SAMPLES),
                        rng,
                    )
                )
            if "refinement" in checks:
                reports.append(check_piece_refinement(first, second, config.trials, rng))
            if "qr" in checks:
                reports.extend(check_qr_remainder(first, second, config.trials, rng))
            for report in reports:
                _merge_into(merged, report)
            if None is not grid:
                decay.append(check_decay_box(first, second, grid).to_dict())

    if "lattice" in checks:
        for report in check_circle_averages(config.trials, rng):
            _merge_into(merged, report)
    if "exp-nq" in checks:
        for variant in ("complex", "real"):
            _merge_into(merged, check_exp_nq(config.trials, rng, variant))

    for name, report in merged.items():
        if not report.passed:
            logger.error(f"Inequality {name} violated on {report.violations} of {report.samples}.")
        passed = passed and report.passed
    results["violations"] = {name: report.to_dict() for name, report in sorted(merged.items())}
    if decay:
        # Exceedances are expected for a minority of dice and do not fail the run.
        results["decay_box"] = decay
    if "density-bounds" in checks:
        density: Dict[str, Any] = density_bounds_report(config.n)
        results["density_bounds"] = density
        passed = passed and density["passed"]
    if "orthant" in checks:
        orthant: Dict[str, Any] = orthant_report(config.trials, rng)
        results["orthant"] = orthant
        passed = passed and orthant["passed"]
    return ExperimentResult(results, passed)


def run_cltcompare(config: ExperimentConfig, logger: logging.Logger) -> ExperimentResult:
    spec: IntervalSpec = config.interval_spec()
    rng: np.random.Generator = RngStream(config.seed, 0).generator()
    comparisons: List[CltComparison] = []
    for index in range(config.pairs):
        first: Die = sample_balanced(spec, rng)
        second: Die = sample_balanced(spec, rng)
        engine: MonteCarloEngine = MonteCarloEngine(
            config.workers, derive_seed(config.seed, index), logger
        )
        comparisons.append(
            conditional_clt_compare(
                first, second, config.trials, engine.seed, engine=engine, window=config.window
            )
        )
    within: int = sum(1 for c in comparisons if c.within_tolerance)
    misses: int = sum(c.half_integer_misses for c in comparisons)
    return ExperimentResult(
        {
            "interval": spec.describe(),
            "comparisons": [c.to_dict() for c in comparisons],
            "within_tolerance": within,
            "half_integer_misses": misses,
        },
        within == len(comparisons) and 0 == misses,
    )


EXPERIMENTS: Dict[str, Experiment] = {
    "sample": run_sample,
    "tournament3": run_tournament3,
    "tournament4": run_tournament4,
    "moments": run_moments,
    "nested": run_nested,
    "edgeworth": run_edgeworth,
    "charfn": run_charfn,
    "cltcompare": run_cltcompare,
}
