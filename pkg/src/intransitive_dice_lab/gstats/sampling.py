import logging
import math
from dataclasses import dataclass
from typing import Dict

import numpy as np

from intransitive_dice_lab.dice_core.die import Die, sample_balanced
from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.gstats.g_moments import (
    GMoments,
    moments_closed_form,
    moments_quadrature,
)
from intransitive_dice_lab.mc_engine.accumulator import Accumulator
from intransitive_dice_lab.mc_engine.engine import MonteCarloEngine

MOMENT_STATISTICS = (
    "var_a",
    "var_a_sq",
    "cv_a_sq",
    "cv_ab",
    "cv_ab_sq",
    "var_a_cond",
    "cv_ab_cond_sq",
    "sup_a",
    "sup_exceeds",
)


def pair_moments(first: Die, second: Die) -> GMoments:
    """
    Uses the closed forms on the symmetric interval and exact quadrature
    elsewhere.
    """
    if first.spec.is_symmetric:
        return moments_closed_form(first, second)
    return moments_quadrature(first, second)


@dataclass(frozen=True)
class MomentTrial:
    """
    One draw of a balanced pair (A, B) and the moment statistics of the pair.
    """

    spec: IntervalSpec

    def __call__(self, rng: np.random.Generator, trial_index: int) -> Dict[str, float]:
        first: Die = sample_balanced(self.spec, rng)
        second: Die = sample_balanced(self.spec, rng)
        moments: GMoments = pair_moments(first, second)
        n: int = self.spec.n
        sup_limit: float = 5.0 * math.sqrt(n * math.log(n))
        # cv_a is reported on the symmetric scale so thresholds do not depend on the interval.
        cv_a: float = moments.cv_a * math.sqrt(12.0) / self.spec.length
        return {
            "var_a": moments.var_a,
            "var_a_sq": moments.var_a * moments.var_a,
            "cv_a_sq": cv_a * cv_a,
            "cv_ab": moments.cv_ab,
            "cv_ab_sq": moments.cv_ab * moments.cv_ab,
            "var_a_cond": moments.var_a_cond,
            "cv_ab_cond_sq": moments.cv_ab_cond * moments.cv_ab_cond,
            "sup_a": moments.sup_a,
            "sup_exceeds": 1.0 if moments.sup_a >= sup_limit else 0.0,
        }


def sample_moment_statistics(
    spec: IntervalSpec, count: int, engine: MonteCarloEngine
) -> Dict[str, Accumulator]:
    """
    Monte Carlo over `count` balanced pairs.

    :return: One accumulator per name in MOMENT_STATISTICS.
    """
    logging.getLogger(__name__).debug(f"Sampling moment statistics for {count} pairs.")
    return engine.run(MomentTrial(spec), count, label=f"moments n={spec.n}")
