import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from intransitive_dice_lab.dice_core.die import Die
from intransitive_dice_lab.dice_core.interval import SQRT3, IntervalSpec
from intransitive_dice_lab.errors import (
    DimensionMismatch,
    IntervalMismatch,
    NotBalanced,
    OutOfRange,
    UnsupportedInterval,
)


@dataclass(frozen=True)
class GMoments:
    """
    Second moments of (U_A, U_B, V) where U_A = g_A(V) for a uniform roll V,
    together with the covariances left after conditioning on the face-sum.
    """

    var_a: float
    var_b: float
    cv_ab: float
    cv_a: float
    cv_b: float
    var_h: float
    var_a_cond: float
    var_b_cond: float
    cv_ab_cond: float
    sup_a: float
    sup_b: float
    rho_cond: float

    @classmethod
    def from_primitives(
        cls,
        var_a: float,
        var_b: float,
        cv_ab: float,
        cv_a: float,
        cv_b: float,
        var_h: float,
        sup_a: float,
        sup_b: float,
    ) -> "GMoments":
        var_a_cond: float = var_a - cv_a * cv_a / var_h
        var_b_cond: float = var_b - cv_b * cv_b / var_h
        cv_ab_cond: float = cv_ab - cv_a * cv_b / var_h
        rho_cond: float = 0.0
        if var_a_cond > 0.0 and var_b_cond > 0.0:
            rho_cond = cv_ab_cond / math.sqrt(var_a_cond * var_b_cond)
            rho_cond = min(1.0, max(-1.0, rho_cond))
        return cls(
            var_a=var_a,
            var_b=var_b,
            cv_ab=cv_ab,
            cv_a=cv_a,
            cv_b=cv_b,
            var_h=var_h,
            var_a_cond=var_a_cond,
            var_b_cond=var_b_cond,
            cv_ab_cond=cv_ab_cond,
            sup_a=sup_a,
            sup_b=sup_b,
            rho_cond=rho_cond,
        )

    @property
    def is_degenerate(self) -> bool:
        """
        :return: True when a conditional variance is not positive, in which case
            rho_cond is reported as 0.
        """
        return self.var_a_cond <= 0.0 or self.var_b_cond <= 0.0

    def to_dict(self) -> Dict[str, float]:
        return dict(self.__dict__)


def _check_pair(first: Die, second: Die) -> None:
    if first.n != second.n:
        raise DimensionMismatch(f"Face counts differ: {first.n} vs {second.n}")
    if not first.spec.same_interval(second.spec):
        raise IntervalMismatch(
            f"Dice live on different intervals: {first.spec.describe()} vs"
            f" {second.spec.describe()}"
        )


def g_values(die: Die, xs: np.ndarray) -> np.ndarray:
    """
    Vectorized g_A without the range check.
    """
    spec: IntervalSpec = die.spec
    counts: np.ndarray = np.searchsorted(die.sorted_faces, xs, side="right")
    return counts - spec.n * (np.asarray(xs, dtype=np.float64) - spec.z1) / spec.length


def g_eval(die: Die, x: float) -> float:
    """
    Centered counting function g_A(x) = f_A(x) - n F(x).

    :raise OutOfRange: If x lies outside the die's interval.
    """
    spec: IntervalSpec = die.spec
    if not spec.contains(x):
        raise OutOfRange(f"x={x} outside [{spec.z1}, {spec.z2}]")
    return float(g_values(die, np.array([x]))[0])


def sum_g(first: Die, second: Die) -> float:
    """
    :return: Sum of g_first over the faces of the second die. It is positive
        exactly when the second die beats the first.
    """
    _check_pair(first, second)
    return float(math.fsum(g_values(first, second.faces)))


def sup_norm_g(die: Die) -> float:
    """
    Exact sup norm of g_A over the interval.

    g_A decreases linearly between faces and jumps up at each face, so the
    extremes are among the left and right limits at the faces and the two
    endpoints.
    """
    spec: IntervalSpec = die.spec
    faces: np.ndarray = die.sorted_faces
    drift: np.ndarray = spec.n * (faces - spec.z1) / spec.length
    right_values: np.ndarray = np.searchsorted(faces, faces, side="right") - drift
    left_values: np.ndarray = np.searchsorted(faces, faces, side="left") - drift
    at_z1: float = float(np.searchsorted(faces, spec.z1, side="right"))
    return float(
        max(np.abs(right_values).max(), np.abs(left_values).max(), abs(at_z1), 0.0)
    )


def moments_quadrature(first: Die, second: Die) -> GMoments:
    """
    Computes every moment by exact piecewise integration.

    Between consecutive merged breakpoints both g_A and g_B are linear, so the
    products appearing in the moments are quadratics and Simpson's rule on
    each piece is exact.
    """
    _check_pair(first, second)
    spec: IntervalSpec = first.spec
    breakpoints: np.ndarray = np.unique(
        np.concatenate(([spec.z1, spec.z2], first.sorted_faces, second.sorted_faces))
    )
    left: np.ndarray = breakpoints[:-1]
    right: np.ndarray = breakpoints[1:]
    width: np.ndarray = right - left
    middle: np.ndarray = (left + right) / 2.0

    slope: float = spec.n / spec.length
    counts_a: np.ndarray = np.searchsorted(first.sorted_faces, left, side="right")
    counts_b: np.ndarray = np.searchsorted(second.sorted_faces, left, side="right")

    def _ends(counts: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            counts - slope * (left - spec.z1),
            counts - slope * (middle - spec.z1),
            counts - slope * (right - spec.z1),
        )

    la, ma, ra = _ends(counts_a)
    lb, mb, rb = _ends(counts_b)
    center: float = (spec.z1 + spec.z2) / 2.0

    def _simpson(fl: np.ndarray, fm: np.ndarray, fr: np.ndarray) -> float:
        return float(np.sum(width * (fl + 4.0 * fm + fr)) / (6.0 * spec.length))

    mean_a: float = float(np.sum(width * ma) / spec.length)
    mean_b: float = float(np.sum(width * mb) / spec.length)
    second_aa: float = _simpson(la * la, ma * ma, ra * ra)
    second_bb: float = _simpson(lb * lb, mb * mb, rb * rb)
    second_ab: float = _simpson(la * lb, ma * mb, ra * rb)
    cv_a: float = _simpson(la * (left - center), ma * (middle - center), ra * (right - center))
    cv_b: float = _simpson(lb * (left - center), mb * (middle - center), rb * (right - center))

    return GMoments.from_primitives(
        var_a=second_aa - mean_a * mean_a,
        var_b=second_bb - mean_b * mean_b,
        cv_ab=second_ab - mean_a * mean_b,
        cv_a=cv_a,
        cv_b=cv_b,
        var_h=spec.var_h,
        sup_a=sup_norm_g(first),
        sup_b=sup_norm_g(second),
    )


def pairwise_max_sum(first: np.ndarray, second: np.ndarray, fast: bool = True) -> float:
    """
    :return: Sum of max(a_i, b_j) over all pairs.
    :param fast: Sort and use suffix sums; False uses the full outer maximum.
    """
    a: np.ndarray = np.asarray(first, dtype=np.float64)
    b: np.ndarray = np.asarray(second, dtype=np.float64)
    if not fast:
        return float(np.maximum.outer(a, b).sum())
    b_sorted: np.ndarray = np.sort(b)
    prefix: np.ndarray = np.concatenate(([0.0], np.cumsum(b_sorted)))
    not_above: np.ndarray = np.searchsorted(b_sorted, a, side="right")
    above_sum: np.ndarray = prefix[-1] - prefix[not_above]
    return float(np.sum(a * not_above) + np.sum(above_sum))


def _require_balanced(die: Die) -> None:
    spec: IntervalSpec = die.spec
    if abs(die.face_sum() - spec.balance_target) > spec.balance_tolerance:
        raise NotBalanced(f"Face-sum {die.face_sum()} differs from {spec.balance_target}")


def moments_closed_form(first: Die, second: Die, fast: bool = True) -> GMoments:
    """
    Closed-form moments for balanced dice on the symmetric interval.

    :raise UnsupportedInterval: If the dice are not on [-sqrt(3), sqrt(3)].
    :raise NotBalanced: If either die fails the face-sum check.
    """
    _check_pair(first, second)
    if not first.spec.is_symmetric:
        raise UnsupportedInterval(
            f"Closed forms need the symmetric interval, got {first.spec.describe()}"
        )
    _require_balanced(first)
    _require_balanced(second)

    n: int = first.n
    a: np.ndarray = first.faces
    b: np.ndarray = second.faces
    sum_a: float = math.fsum(a)
    sum_b: float = math.fsum(b)
    sq_a: float = math.fsum(a * a)
    sq_b: float = math.fsum(b * b)
    base: float = n * n / 12.0

    def _var(face_sum: float, square_sum: float, max_sum: float) -> float:
        return (
            base
            + n / (2.0 * SQRT3) * face_sum
            + n / 12.0 * square_sum
            - max_sum / (2.0 * SQRT3)
        )

    var_a: float = _var(sum_a, sq_a, pairwise_max_sum(a, a, fast))
    var_b: float = _var(sum_b, sq_b, pairwise_max_sum(b, b, fast))
    cv_ab: float = base + n / 24.0 * (sq_a + sq_b) - pairwise_max_sum(a, b, fast) / (2.0 * SQRT3)
    cv_a: float = (n - sq_a) / (4.0 * SQRT3)
    cv_b: float = (n - sq_b) / (4.0 * SQRT3)

    return GMoments.from_primitives(
        var_a=var_a,
        var_b=var_b,
        cv_ab=cv_ab,
        cv_a=cv_a,
        cv_b=cv_b,
        var_h=1.0,
        sup_a=sup_norm_g(first),
        sup_b=sup_norm_g(second),
    )


def balanced_moment_asymptotics(n: int) -> Dict[str, float]:
    """
    Leading-order expectations over balanced dice on the symmetric interval.
    """
    return {
        "var_a": n / 15.0,
        "cv_a_sq": n / 60.0,
        "cv_ab_sq": 11.0 * n * n / 12600.0,
    }


def iid_moment_expectations(n: int) -> Dict[str, float]:
    """
    Exact expectations over unconstrained iid dice on the unit interval:
    E[U_A^2] = n/6 and E[Var U_A] = n/12.
    """
    return {"second_moment": n / 6.0, "var_a": n / 12.0}
