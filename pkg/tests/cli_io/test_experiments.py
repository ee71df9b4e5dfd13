import logging
from typing import List

import numpy as np
import pytest

from intransitive_dice_lab.cli_io import acceptance as acceptance_module
from intransitive_dice_lab.cli_io.acceptance import (
    AcceptanceSuite,
    moments_relative_difference,
    run_acceptance,
)
from intransitive_dice_lab.cli_io.config import SUBCOMMANDS, ExperimentConfig, parse_args
from intransitive_dice_lab.cli_io.experiments import (
    EXPERIMENTS,
    ExperimentResult,
    expected_a1_sq,
    nested_scale,
)
from intransitive_dice_lab.dice_core.die import Die, sample_balanced
from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.gstats.g_moments import GMoments, moments_quadrature

logger: logging.Logger = logging.getLogger(__name__)


def _config(argv: List[str]) -> ExperimentConfig:
    return parse_args(argv, environ={})


def test_every_subcommand_is_wired() -> None:
    assert set(SUBCOMMANDS) == set(EXPERIMENTS) | {"acceptance"}


def test_helpers() -> None:
    assert 3.0 == nested_scale("X")
    assert 6.0 == nested_scale("Y")
    assert pytest.approx(1.0 - 2.0 / 500.0 - 18.0 / (175.0 * 10_000)) == expected_a1_sq(100)


def test_sample_balanced() -> None:
    result: ExperimentResult = EXPERIMENTS["sample"](
        _config(["sample", "--n", "25", "--trials", "40", "--seed", "3"]), logger
    )
    assert result.passed
    assert result.results["acceptance_rate"] >= result.results["acceptance_lower_bound"]
    assert 40 == result.results["statistics"]["attempts"]["count"]


def test_sample_iid_second_moment() -> None:
    config: ExperimentConfig = _config(
        ["sample", "--kind", "iid", "--interval", "unit", "--n", "21", "--trials", "2000"]
    )
    result: ExperimentResult = EXPERIMENTS["sample"](config, logger)
    assert pytest.approx(21 / 6.0) == result.results["expected"]["second_moment"]
    assert result.passed


def test_tournament4_sweep_plot_rows() -> None:
    config: ExperimentConfig = _config(
        ["tournament4", "--n-sweep", "7,5", "--trials", "40", "--interval", "unit"]
    )
    result: ExperimentResult = EXPERIMENTS["tournament4"](config, logger)
    assert ["5", "7"] == list(result.results["estimates"])
    assert ("n", "p_four_line", "se") == result.plot_columns
    assert [5.0, 7.0] == [row[0] for row in result.plot_rows]


def test_moments_single_statistic() -> None:
    config: ExperimentConfig = _config(
        ["moments", "--n", "31", "--trials", "20", "--stat", "var_a"]
    )
    result: ExperimentResult = EXPERIMENTS["moments"](config, logger)
    assert ["var_a"] == list(result.results["statistics"])
    assert "asymptotic" in result.results["statistics"]["var_a"]
    assert 0 == result.results["sup_exceedances"]


def test_nested_scaling() -> None:
    config: ExperimentConfig = _config(
        ["nested", "--n", "11", "--outer", "20", "--inner", "10", "--quantity", "Y"]
    )
    result: ExperimentResult = EXPERIMENTS["nested"](config, logger)
    summary = result.results["summary"]
    assert pytest.approx(6.0 * summary["second_moment"]) == result.results["scaled_second_moment"]
    assert None is result.passed


def test_edgeworth_checks() -> None:
    density: ExperimentResult = EXPERIMENTS["edgeworth"](
        _config(["edgeworth", "--check", "density", "--n", "12"]), logger
    )
    assert density.passed
    assert ("x", "edgeworth", "exact") == density.plot_columns
    assert 601 == len(density.plot_rows)
    integrals: ExperimentResult = EXPERIMENTS["edgeworth"](
        _config(["edgeworth", "--check", "simple-integrals"]), logger
    )
    assert integrals.passed
    assert 17 == len(integrals.results["rows"])


def test_charfn_all_checks() -> None:
    config: ExperimentConfig = _config(
        ["charfn", "--n", "21", "--trials", "300", "--grid", "3", "--seed", "5"]
    )
    result: ExperimentResult = EXPERIMENTS["charfn"](config, logger)
    assert result.passed, result.results["violations"]
    assert {"large_gamma", "lipschitz", "qr_remainder", "exp_nq_real"} <= set(
        result.results["violations"]
    )
    assert 1 == len(result.results["decay_box"])
    assert result.results["density_bounds"]["passed"]


def test_cltcompare_pairs() -> None:
    config: ExperimentConfig = _config(
        ["cltcompare", "--n", "21", "--trials", "50", "--pairs", "2", "--interval", "wide"]
    )
    result: ExperimentResult = EXPERIMENTS["cltcompare"](config, logger)
    assert 2 == len(result.results["comparisons"])
    assert 0 == result.results["half_integer_misses"]


def test_acceptance_subset() -> None:
    config: ExperimentConfig = _config(["acceptance", "--criteria", "1,6"])
    result: ExperimentResult = run_acceptance(config, logger)
    assert result.passed
    assert [1, 6] == [criterion["number"] for criterion in result.results["criteria"]]
    assert [12, 12, 12, 12] == result.results["criteria"][0]["details"]["margins"]


def test_acceptance_rejects_unknown_criteria() -> None:
    suite: AcceptanceSuite = AcceptanceSuite(_config(["acceptance"]), logger)
    with pytest.raises(ValueError):
        suite.run([99])


def test_tournament3_payload_is_byte_identical() -> None:
    config: ExperimentConfig = _config(["acceptance", "--scale", "0.05", "--seed", "11"])
    suite: AcceptanceSuite = AcceptanceSuite(config, logger)
    payload: str = suite.tournament3_payload()
    assert payload == suite.tournament3_payload()
    assert '"counts"' in payload
    assert "wall_time" not in payload


def test_moment_difference_is_relative(monkeypatch: pytest.MonkeyPatch) -> None:
    rng: np.random.Generator = np.random.default_rng(23)
    spec: IntervalSpec = IntervalSpec.symmetric(31)
    first: Die = sample_balanced(spec, rng)
    second: Die = sample_balanced(spec, rng)
    assert moments_relative_difference(first, second) <= 1e-6

    def _skewed(a: Die, b: Die) -> GMoments:
        exact: GMoments = moments_quadrature(a, b)
        return GMoments.from_primitives(
            var_a=exact.var_a,
            var_b=exact.var_b,
            cv_ab=exact.cv_ab * (1.0 + 1e-4),
            cv_a=exact.cv_a,
            cv_b=exact.cv_b,
            var_h=exact.var_h,
            sup_a=exact.sup_a,
            sup_b=exact.sup_b,
        )

    # A relative error in cv_ab must show up as such however small cv_ab is.
    monkeypatch.setattr(acceptance_module, "moments_closed_form", _skewed)
    assert moments_relative_difference(first, second) >= 0.99e-4
