import logging
from typing import Dict, List

import numpy as np
import pytest

from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.mc_engine.accumulator import Accumulator
from intransitive_dice_lab.mc_engine.engine import MonteCarloEngine
from intransitive_dice_lab.tournaments.classify import Tournament3Class, Tournament4Class
from intransitive_dice_lab.tournaments.estimators import (
    IdentityResidual,
    NestedTrial,
    TournamentEstimate,
    Tournament4Trial,
    estimate_nested_X,
    estimate_nested_Y,
    estimate_tournament3,
    estimate_tournament4,
    identity_report,
    summarize_nested,
)

logger: logging.Logger = logging.getLogger(__name__)

QUASIRANDOM4: Dict[str, float] = {
    "transitive": 3.0 / 8.0,
    "four_cycle": 3.0 / 8.0,
    "winner_or_loser_plus_cycle": 1.0 / 4.0,
}
QUASIRANDOM3: Dict[str, float] = {"transitive": 3.0 / 4.0, "cycle": 1.0 / 4.0}


def test_from_counts_excludes_degenerate() -> None:
    estimate: TournamentEstimate = TournamentEstimate.from_counts(
        Tournament3Class, {"transitive": 60, "cycle": 30, "degenerate": 10}, 10, 0
    )
    assert 100 == estimate.trials
    assert 10 == estimate.degenerate
    assert pytest.approx(2.0 / 3.0) == estimate.probabilities["transitive"]
    assert "degenerate" not in estimate.probabilities
    assert estimate.intervals["cycle"].ci_low < 1.0 / 3.0 < estimate.intervals["cycle"].ci_high


def test_identities_hold_for_quasirandom_probabilities() -> None:
    estimate3 = TournamentEstimate.from_probabilities(Tournament3Class, QUASIRANDOM3, 10**6, 101)
    estimate4 = TournamentEstimate.from_probabilities(Tournament4Class, QUASIRANDOM4, 10**6, 101)
    residuals: List[IdentityResidual] = identity_report(estimate3, estimate4)
    assert ["transitive", "cycle"] == [residual.name for residual in residuals]
    for residual in residuals:
        assert pytest.approx(0.0, abs=1e-12) == residual.residual
        assert not residual.flagged


def test_identity_flags_inconsistent_probabilities() -> None:
    estimate3 = TournamentEstimate.from_probabilities(
        Tournament3Class, {"transitive": 0.5, "cycle": 0.5}, 10**5, 101
    )
    estimate4 = TournamentEstimate.from_probabilities(Tournament4Class, QUASIRANDOM4, 10**5, 101)
    assert all(residual.flagged for residual in identity_report(estimate3, estimate4))


def test_tournament4_trial_observations() -> None:
    observation = Tournament4Trial(IntervalSpec.unit(15))(np.random.default_rng(1), 0)
    assert 1.0 == sum(observation[cls.value] for cls in Tournament4Class)
    assert 1.0 == sum(observation["discard_one." + cls.value] for cls in Tournament3Class)


def test_small_tournament_run_is_consistent() -> None:
    estimate: TournamentEstimate = estimate_tournament4(IntervalSpec.unit(11), 200, seed=4)
    assert 200 == estimate.trials
    assert 200 == sum(estimate.counts.values())
    assert pytest.approx(1.0) == sum(estimate.probabilities.values())
    assert pytest.approx(1.0) == sum(estimate.discard_one.values())
    again: TournamentEstimate = estimate_tournament4(IntervalSpec.unit(11), 200, seed=4)
    assert estimate.counts == again.counts


@pytest.mark.slow
def test_three_dice_cycle_probability() -> None:
    estimate: TournamentEstimate = estimate_tournament3(IntervalSpec.unit(101), 4000, seed=42)
    p_cycle: float = estimate.probabilities["cycle"]
    assert abs(p_cycle - 0.25) <= 4.0 * estimate.standard_errors["cycle"] + 0.02


def test_nested_x_is_centred_at_one_half() -> None:
    summary = estimate_nested_X(IntervalSpec.unit(21), 200, 40, seed=8)
    assert 200 == summary.outer and 40 == summary.inner
    assert abs(summary.mean - 0.5) <= 4.0 * summary.mean_se
    assert pytest.approx(summary.var_hat - summary.binomial_correction) == summary.var_corrected


def test_nested_y_estimates_a_probability() -> None:
    engine: MonteCarloEngine = MonteCarloEngine(1, 3, logger)
    summary = estimate_nested_Y(IntervalSpec.unit(21), 50, 20, seed=0, engine=engine)
    assert 0.0 <= summary.mean <= 1.0
    with pytest.raises(ValueError):
        estimate_nested_Y(IntervalSpec.unit(21), 50, 1, seed=0)


def test_inner_noise_correction() -> None:
    # Every outer estimate equals 1/2: the true value has no spread at all.
    trial = NestedTrial(IntervalSpec.unit(5), 4, False)
    assert {"estimate", "binomial", "second_moment"} == set(
        trial(np.random.default_rng(0), 0)
    )
    results: Dict[str, Accumulator] = {
        "estimate": Accumulator(),
        "binomial": Accumulator(),
        "second_moment": Accumulator(),
    }
    for _ in range(10):
        results["estimate"].push(0.5)
        results["binomial"].push(0.25)
        results["second_moment"].push(0.25 - 0.25 / 3.0)
    summary = summarize_nested(results, 4)
    assert pytest.approx(0.25 / 3.0) == summary.binomial_correction
    assert pytest.approx(-0.25 / 3.0) == summary.var_corrected
    assert pytest.approx(0.25 - 0.25 / 3.0) == summary.second_moment


def test_tournament3_counts_per_worker_count() -> None:
    spec: IntervalSpec = IntervalSpec.symmetric(21)
    by_workers: Dict[int, TournamentEstimate] = {}
    for workers in (1, 8):
        first: TournamentEstimate = estimate_tournament3(spec, 200, 5, workers=workers)
        second: TournamentEstimate = estimate_tournament3(spec, 200, 5, workers=workers)
        assert first.to_dict() == second.to_dict()
        by_workers[workers] = first
    for estimate in by_workers.values():
        assert 200 == sum(estimate.counts.values())
