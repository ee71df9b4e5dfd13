import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Type, Union

import numpy as np

from intransitive_dice_lab.dice_core.die import draw_balanced_faces, margin_of
from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.mc_engine.accumulator import (
    Accumulator,
    EstimateReport,
    wilson_interval,
)
from intransitive_dice_lab.mc_engine.engine import MonteCarloEngine
from intransitive_dice_lab.tournaments.classify import (
    PAIRS4,
    Tournament3Class,
    Tournament4Class,
    classify3,
    classify4,
    sub_margins3,
)

logger: logging.Logger = logging.getLogger(__name__)

TournamentClass = Union[Type[Tournament3Class], Type[Tournament4Class]]

DISCARD_PREFIX: str = "discard_one."


def _sorted_balanced_dice(
    spec: IntervalSpec, rng: np.random.Generator, count: int
) -> List[np.ndarray]:
    return [np.sort(draw_balanced_faces(spec, rng)[0]) for _ in range(count)]


@dataclass(frozen=True)
class Tournament3Trial:
    spec: IntervalSpec

    def __call__(self, rng: np.random.Generator, trial_index: int) -> Dict[str, float]:
        a, b, c = _sorted_balanced_dice(self.spec, rng, 3)
        outcome: Tournament3Class = classify3(margin_of(a, b), margin_of(b, c), margin_of(a, c))
        return {cls.value: float(cls is outcome) for cls in Tournament3Class}


@dataclass(frozen=True)
class Tournament4Trial:
    """
    Classifies four balanced dice, then drops a uniformly random die and
    classifies the remaining three.
    """

    spec: IntervalSpec

    def __call__(self, rng: np.random.Generator, trial_index: int) -> Dict[str, float]:
        dice: List[np.ndarray] = _sorted_balanced_dice(self.spec, rng, 4)
        margins: List[int] = [margin_of(dice[i], dice[j]) for i, j in PAIRS4]
        outcome: Tournament4Class = classify4(margins)
        observation: Dict[str, float] = {
            cls.value: float(cls is outcome) for cls in Tournament4Class
        }
        dropped: int = int(rng.integers(4))
        outcome3: Tournament3Class = classify3(*sub_margins3(margins, dropped))
        for cls in Tournament3Class:
            observation[DISCARD_PREFIX + cls.value] = float(cls is outcome3)
        return observation


@dataclass
class TournamentEstimate:
    """
    Class frequencies of a tournament experiment.

    Degenerate outcomes are counted but excluded from the probabilities,
    which are taken over the non-degenerate trials.
    """

    counts: Dict[str, int]
    probabilities: Dict[str, float]
    standard_errors: Dict[str, float]
    intervals: Dict[str, EstimateReport]
    trials: int
    n: int
    seed: int
    degenerate: int
    discard_one: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_counts(
        cls,
        classes: TournamentClass,
        counts: Mapping[str, int],
        n: int,
        seed: int,
        discard_one: Optional[Dict[str, float]] = None,
    ) -> "TournamentEstimate":
        all_counts: Dict[str, int] = {c.value: int(counts.get(c.value, 0)) for c in classes}
        degenerate: int = all_counts["degenerate"]
        trials: int = sum(all_counts.values())
        effective: int = trials - degenerate
        probabilities: Dict[str, float] = {}
        standard_errors: Dict[str, float] = {}
        intervals: Dict[str, EstimateReport] = {}
        if degenerate > 0:
            logger.warning(f"{degenerate} of {trials} tournaments contained a drawn pair.")
        for c in classes:
            if "degenerate" == c.value:
                continue
            if 0 == effective:
                probabilities[c.value] = 0.0
                standard_errors[c.value] = 0.0
                continue
            report: EstimateReport = wilson_interval(all_counts[c.value], effective)
            probabilities[c.value] = report.point
            standard_errors[c.value] = report.se
            intervals[c.value] = report
        return cls(
            counts=all_counts,
            probabilities=probabilities,
            standard_errors=standard_errors,
            intervals=intervals,
            trials=trials,
            n=n,
            seed=seed,
            degenerate=degenerate,
            discard_one=dict(discard_one) if None is not discard_one else {},
        )

    @classmethod
    def from_probabilities(
        cls, classes: TournamentClass, probabilities: Mapping[str, float], trials: int, n: int
    ) -> "TournamentEstimate":
        """
        Builds an estimate from known class probabilities, e.g. exact or
        synthetic values.
        """
        counts: Dict[str, int] = {
            key: int(round(value * trials)) for key, value in probabilities.items()
        }
        estimate: TournamentEstimate = cls.from_counts(classes, counts, n, 0)
        estimate.probabilities = {
            c.value: float(probabilities.get(c.value, 0.0))
            for c in classes
            if "degenerate" != c.value
        }
        estimate.trials = trials
        return estimate

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "seed": self.seed,
            "trials": self.trials,
            "degenerate": self.degenerate,
            "counts": dict(self.counts),
            "probabilities": dict(self.probabilities),
            "standard_errors": dict(self.standard_errors),
            "intervals": {key: report.to_dict() for key, report in self.intervals.items()},
            "discard_one": dict(self.discard_one),
        }


def _counts_from(results: Mapping[str, Accumulator], classes: TournamentClass) -> Dict[str, int]:
    return {
        c.value: int(round(results[c.value].total)) if c.value in results else 0 for c in classes
    }


def _engine(workers: int, seed: int, engine: Optional[MonteCarloEngine]) -> MonteCarloEngine:
    if None is not engine:
        return engine
    return MonteCarloEngine(workers, seed, logger)


def estimate_tournament3(
    spec: IntervalSpec,
    trials: int,
    seed: int,
    workers: int = 1,
    engine: Optional[MonteCarloEngine] = None,
) -> TournamentEstimate:
    """
    Estimates the 3-dice class probabilities from `trials` triples of
    independent balanced dice.
    """
    if 0 == spec.n % 2:
        logger.warning(f"Even n={spec.n}: drawn pairs become possible in tournament runs.")
    runner: MonteCarloEngine = _engine(workers, seed, engine)
    results: Dict[str, Accumulator] = runner.run(
        Tournament3Trial(spec), trials, label=f"tournament3 n={spec.n}"
    )
    return TournamentEstimate.from_counts(
        Tournament3Class, _counts_from(results, Tournament3Class), spec.n, runner.seed
    )


def estimate_tournament4(
    spec: IntervalSpec,
    trials: int,
    seed: int,
    workers: int = 1,
    engine: Optional[MonteCarloEngine] = None,
) -> TournamentEstimate:
    """
    Estimates the 4-dice class probabilities. The 3-dice frequencies obtained
    by discarding one random die per trial are attached as `discard_one`.
    """
    if 0 == spec.n % 2:
        logger.warning(f"Even n={spec.n}: drawn pairs become possible in tournament runs.")
    runner: MonteCarloEngine = _engine(workers, seed, engine)
    results: Dict[str, Accumulator] = runner.run(
        Tournament4Trial(spec), trials, label=f"tournament4 n={spec.n}"
    )
    discard_counts: Dict[str, int] = {
        c.value: int(round(results[DISCARD_PREFIX + c.value].total)) for c in Tournament3Class
    }
    discard_effective: int = trials - discard_counts["degenerate"]
    discard_one: Dict[str, float] = {
        c.value: (discard_counts[c.value] / discard_effective if discard_effective > 0 else 0.0)
        for c in Tournament3Class
        if Tournament3Class.Degenerate is not c
    }
    return TournamentEstimate.from_counts(
        Tournament4Class,
        _counts_from(results, Tournament4Class),
        spec.n,
        runner.seed,
        discard_one=discard_one,
    )


@dataclass(frozen=True)
class NestedTrial:
    """
    One outer draw of a nested estimator.

    With `pair_fixed` False the outer draw is a die A and each inner draw a
    fresh B, estimating X = Pr[A beats B | A]. With `pair_fixed` True the outer
    draw is a pair (B, C) and each inner draw a fresh A, estimating
    Y = Pr[A beats B and C | B, C].
    """

    spec: IntervalSpec
    inner: int
    pair_fixed: bool

    def __call__(self, rng: np.random.Generator, trial_index: int) -> Dict[str, float]:
        fixed_count: int = 2 if self.pair_fixed else 1
        fixed: List[np.ndarray] = _sorted_balanced_dice(self.spec, rng, fixed_count)
        wins: float = 0.0
        for _ in range(self.inner):
            fresh: np.ndarray = np.sort(draw_balanced_faces(self.spec, rng)[0])
            if self.pair_fixed:
                if margin_of(fresh, fixed[0]) > 0 and margin_of(fresh, fixed[1]) > 0:
                    wins += 1.0
            else:
                margin: int = margin_of(fixed[0], fresh)
                if margin > 0:
                    wins += 1.0
                elif 0 == margin:
                    wins += 0.5
        estimate: float = wins / self.inner
        binomial: float = estimate * (1.0 - estimate)
        return {
            "estimate": estimate,
            "binomial": binomial,
            "second_moment": estimate * estimate - binomial / (self.inner - 1),
        }


@dataclass(frozen=True)
class NestedSummary:
    """
    Distribution summary of a conditional probability estimated by nested
    sampling. `var_corrected` and `second_moment` remove the inner binomial
    noise and are unbiased for Var and E of the square of the true value.
    """

    outer: int
    inner: int
    mean: float
    mean_se: float
    var_hat: float
    binomial_correction: float
    var_corrected: float
    second_moment: float
    second_moment_se: float

    def to_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


def summarize_nested(results: Mapping[str, Accumulator], inner: int) -> NestedSummary:
    estimates: Accumulator = results["estimate"]
    correction: float = results["binomial"].mean / (inner - 1)
    return NestedSummary(
        outer=estimates.count,
        inner=inner,
        mean=estimates.mean,
        mean_se=estimates.sem(),
        var_hat=estimates.variance(),
        binomial_correction=correction,
        var_corrected=estimates.variance() - correction,
        second_moment=results["second_moment"].mean,
        second_moment_se=results["second_moment"].sem(),
    )


def _estimate_nested(
    spec: IntervalSpec,
    outer: int,
    inner: int,
    seed: int,
    pair_fixed: bool,
    workers: int,
    engine: Optional[MonteCarloEngine],
) -> NestedSummary:
    if outer < 2 or inner < 2:
        raise ValueError(f"outer and inner must be at least 2, got {outer} and {inner}")
    runner: MonteCarloEngine = _engine(workers, seed, engine)
    label: str = "nested Y" if pair_fixed else "nested X"
    results: Dict[str, Accumulator] = runner.run(
        NestedTrial(spec, inner, pair_fixed), outer, label=f"{label} n={spec.n}"
    )
    return summarize_nested(results, inner)


def estimate_nested_X(
    spec: IntervalSpec,
    outer: int,
    inner: int,
    seed: int,
    workers: int = 1,
    engine: Optional[MonteCarloEngine] = None,
) -> NestedSummary:
    return _estimate_nested(spec, outer, inner, seed, False, workers, engine)


def estimate_nested_Y(
    spec: IntervalSpec,
    outer: int,
    inner: int,
    seed: int,
    workers: int = 1,
    engine: Optional[MonteCarloEngine] = None,
) -> NestedSummary:
    return _estimate_nested(spec, outer, inner, seed, True, workers, engine)


@dataclass(frozen=True)
class IdentityResidual:
    name: str
    residual: float
    se: float
    flagged: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _linear_se(
    probabilities: Mapping[str, float], coefficients: Mapping[str, float], trials: int
) -> float:
    """
    Standard error of sum(c_i * p_i) for multinomial frequencies p_i.
    """
    if trials < 1:
        return 0.0
    first: float = sum(c * probabilities.get(key, 0.0) for key, c in coefficients.items())
    second: float = sum(c * c * probabilities.get(key, 0.0) for key, c in coefficients.items())
    return math.sqrt(max(0.0, second - first * first) / trials)


def _residual(name: str, residual: float, variances: Sequence[float]) -> IdentityResidual:
    se: float = math.sqrt(sum(variances))
    flagged: bool = abs(residual) > (4.0 * se if se > 0.0 else 1e-12)
    return IdentityResidual(name=name, residual=residual, se=se, flagged=flagged)


def identity_report(
    estimate3: TournamentEstimate, estimate4: TournamentEstimate
) -> List[IdentityResidual]:
    """
    Checks the linear identities tying 3-dice and 4-dice class probabilities:
    P_3line = P_4line + P_4cycle/2 + 3 P_1cycle/4 and
    P_cycle = P_4cycle/2 + P_1cycle/4, where P_1cycle is the probability of a
    winner or loser on top of a 3-cycle.

    Residuals further than 4 combined standard errors from zero are flagged.
    """
    if estimate3.n != estimate4.n:
        logger.warning(f"Identity check mixes n={estimate3.n} and n={estimate4.n}.")
    p3: Dict[str, float] = estimate3.probabilities
    p4: Dict[str, float] = estimate4.probabilities
    trials3: int = estimate3.trials - estimate3.degenerate
    trials4: int = estimate4.trials - estimate4.degenerate

    line_coefficients: Dict[str, float] = {
        Tournament4Class.Transitive.value: 1.0,
        Tournament4Class.FourCycle.value: 0.5,
        Tournament4Class.WinnerOrLoserPlusCycle.value: 0.75,
    }
    cycle_coefficients: Dict[str, float] = {
        Tournament4Class.FourCycle.value: 0.5,
        Tournament4Class.WinnerOrLoserPlusCycle.value: 0.25,
    }
    p3_line: float = p3[Tournament3Class.Transitive.value]
    p3_cycle: float = p3[Tournament3Class.Cycle.value]
    p3_variance: float = p3_line * (1.0 - p3_line) / trials3 if trials3 > 0 else 0.0

    def _combination(coefficients: Mapping[str, float]) -> float:
        return sum(c * p4[key] for key, c in coefficients.items())

    residuals: List[IdentityResidual] = [
        _residual(
            "transitive",
            p3_line - _combination(line_coefficients),
            [p3_variance, _linear_se(p4, line_coefficients, trials4) ** 2],
        ),
        _residual(
            "cycle",
            p3_cycle - _combination(cycle_coefficients),
            [p3_variance, _linear_se(p4, cycle_coefficients, trials4) ** 2],
        ),
    ]
    if estimate4.discard_one:
        discard_line: float = estimate4.discard_one[Tournament3Class.Transitive.value]
        discard_variance: float = (
            discard_line * (1.0 - discard_line) / trials4 if trials4 > 0 else 0.0
        )
        residuals.append(
            _residual(
                "discard_one_transitive",
                p3_line - discard_line,
                [p3_variance, discard_variance],
            )
        )
    for residual in residuals:
        if residual.flagged:
            logger.error(
                f"Identity {residual.name} off by {residual.residual:.3g} (se {residual.se:.3g})."
            )
    return residuals
