import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np

from intransitive_dice_lab.dice_core.die import Die
from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.errors import DimensionMismatch, IntervalMismatch, NotBalanced
from intransitive_dice_lab.gstats.g_moments import GMoments, moments_quadrature

Frequency = Union[float, np.ndarray]

TWO_PI_SQ: float = 2.0 * math.pi * math.pi


@dataclass(frozen=True)
class CharFnPoint:
    alpha: float
    beta: float
    gamma: float
    value: complex

    def to_dict(self) -> Dict[str, float]:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "real": self.value.real,
            "imag": self.value.imag,
            "abs": abs(self.value),
        }


@dataclass(frozen=True)
class Pieces:
    """
    Partition of [0, n] into maximal intervals on which both counting
    functions are constant.
    """

    midpoints: np.ndarray
    widths: np.ndarray
    counts_a: np.ndarray
    counts_b: np.ndarray


def _check_wide(first: Die, second: Die) -> IntervalSpec:
    if first.n != second.n:
        raise DimensionMismatch(f"Face counts differ: {first.n} vs {second.n}")
    for die in (first, second):
        if not die.spec.is_wide:
            raise IntervalMismatch(
                f"Characteristic functions use the [0, n] interval, got {die.spec.describe()};"
                " rescale the dice first."
            )
    return first.spec


def pieces(first: Die, second: Die, extra_breakpoints: Optional[np.ndarray] = None) -> Pieces:
    """
    :param extra_breakpoints: Additional points to split the partition at;
        the value of f-hat does not depend on them.
    """
    spec: IntervalSpec = _check_wide(first, second)
    points: np.ndarray = np.concatenate(([0.0, spec.z2], first.sorted_faces, second.sorted_faces))
    if None is not extra_breakpoints:
        points = np.concatenate((points, np.clip(extra_breakpoints, 0.0, spec.z2)))
    breakpoints: np.ndarray = np.unique(points)
    left: np.ndarray = breakpoints[:-1]
    right: np.ndarray = breakpoints[1:]
    return Pieces(
        midpoints=(left + right) / 2.0,
        widths=right - left,
        counts_a=np.searchsorted(first.sorted_faces, left, side="right").astype(np.float64),
        counts_b=np.searchsorted(second.sorted_faces, left, side="right").astype(np.float64),
    )


def fhat_from_pieces(
    parts: Pieces, n: int, alpha: Frequency, beta: Frequency, gamma: Frequency
) -> np.ndarray:
    """
    Vectorized f-hat over broadcastable frequency arrays.

    On a piece with counts (d, e) the phase is alpha d + beta e - gamma n/2 +
    (gamma - alpha - beta) t, and the integral of e(delta t) over a piece of
    width w centred at m is w e(delta m) sinc(delta w).
    """
    a: np.ndarray = np.asarray(alpha, dtype=np.float64)[..., np.newaxis]
    b: np.ndarray = np.asarray(beta, dtype=np.float64)[..., np.newaxis]
    g: np.ndarray = np.asarray(gamma, dtype=np.float64)[..., np.newaxis]
    delta: np.ndarray = g - a - b
    phase: np.ndarray = (
        a * parts.counts_a + b * parts.counts_b - g * n / 2.0 + delta * parts.midpoints
    )
    terms: np.ndarray = parts.widths * np.exp(2j * np.pi * phase) * np.sinc(delta * parts.widths)
    return terms.sum(axis=-1) / n


def fhat_exact(first: Die, second: Die, alpha: float, beta: float, gamma: float) -> complex:
    """
    Exact characteristic function E e(alpha U_A + beta U_B + gamma (V - n/2))
    of two dice on [0, n], with e(x) = exp(2 pi i x).

    :raise IntervalMismatch: If a die is not on the [0, n] interval.
    """
    parts: Pieces = pieces(first, second)
    return complex(fhat_from_pieces(parts, first.n, alpha, beta, gamma))


def quadratic_form(
    moments: GMoments, alpha: Frequency, beta: Frequency, gamma: Frequency
) -> Frequency:
    """
    Q = 2 pi^2 times the variance of alpha U_A + beta U_B + gamma V.
    """
    return TWO_PI_SQ * (
        alpha * alpha * moments.var_a
        + beta * beta * moments.var_b
        + gamma * gamma * moments.var_h
        + 2.0 * alpha * beta * moments.cv_ab
        + 2.0 * alpha * gamma * moments.cv_a
        + 2.0 * beta * gamma * moments.cv_b
    )


def ghat(
    moments: GMoments, n: int, alpha: Frequency, beta: Frequency, gamma: Frequency
) -> Frequency:
    """
    Characteristic function exp(-n Q) of the sum of n Gaussian surrogates.
    """
    return np.exp(-n * quadratic_form(moments, alpha, beta, gamma))


@dataclass(frozen=True)
class QRDecomp:
    """
    f-hat = 1 - q + r, with r bounded by a cubic in the frequencies.
    """

    q: float
    r_bound: float
    r_tight: float
    r_actual: complex

    @property
    def within_bound(self) -> bool:
        return abs(self.r_actual) <= self.r_bound + 1e-9

    def to_dict(self) -> Dict[str, float]:
        return {
            "q": self.q,
            "r_bound": self.r_bound,
            "r_tight": self.r_tight,
            "r_actual_real": self.r_actual.real,
            "r_actual_imag": self.r_actual.imag,
            "r_actual_abs": abs(self.r_actual),
        }


def remainder_bounds(
    moments: GMoments, n: int, alpha: Frequency, beta: Frequency, gamma: Frequency
) -> Tuple[Frequency, Frequency]:
    """
    :return: The simplified bound 1200 (|alpha|^3 s_A^3 + |beta|^3 s_B^3 +
        |gamma|^3 n^3/8) and the tight bound (4 pi^3/3) (|alpha| s_A +
        |beta| s_B + |gamma| n/2)^3, with s the sup norms of g.
    """
    x: Frequency = np.abs(alpha) * moments.sup_a
    y: Frequency = np.abs(beta) * moments.sup_b
    z: Frequency = np.abs(gamma) * n / 2.0
    simplified: Frequency = 1200.0 * (x**3 + y**3 + z**3)
    tight: Frequency = 4.0 * math.pi**3 / 3.0 * (x + y + z) ** 3
    return simplified, tight


def qr_decompose(
    first: Die,
    second: Die,
    alpha: float,
    beta: float,
    gamma: float,
    moments: Optional[GMoments] = None,
) -> QRDecomp:
    """
    :param moments: Moments of the pair, computed by quadrature if None.
    :raise IntervalMismatch: If a die is not on the [0, n] interval.
    :raise NotBalanced: If a die is not balanced.
    """
    _check_wide(first, second)
    for die in (first, second):
        if not die.is_balanced:
            raise NotBalanced(f"{die} is not balanced; the expansion assumes centred U_A.")
    if None is moments:
        moments = moments_quadrature(first, second)
    q: float = float(quadratic_form(moments, alpha, beta, gamma))
    simplified, tight = remainder_bounds(moments, first.n, alpha, beta, gamma)
    value: complex = fhat_exact(first, second, alpha, beta, gamma)
    return QRDecomp(
        q=q, r_bound=float(simplified), r_tight=float(tight), r_actual=value - 1.0 + q
    )
