import math
from fractions import Fraction
from functools import lru_cache
from typing import List, Union

import numpy as np

from intransitive_dice_lab.dice_core.interval import SQRT3
from intransitive_dice_lab.errors import UnsupportedN

MAX_EXACT_N: int = 40

ArrayLike = Union[float, np.ndarray]


@lru_cache(maxsize=None)
def _piece_coefficients(n: int) -> np.ndarray:
    """
    Taylor coefficients of the Irwin-Hall density on each unit piece.

    Row j holds c_0..c_{n-1} such that the density of U_1 + ... + U_n (U_i
    uniform on [0, 1]) equals sum_r c_r u^r on [j, j+1], with u = t - j - 1/2.
    The alternating-sum formula is expanded in exact rational arithmetic, so
    the only rounding is the final conversion of each coefficient.
    """
    degree: int = n - 1
    scale: Fraction = Fraction(1, math.factorial(degree))
    rows: List[List[float]] = []
    for j in range(n):
        row: List[Fraction] = [Fraction(0)] * n
        for i in range(j + 1):
            shift: Fraction = Fraction(2 * (j - i) + 1, 2)
            sign: int = -1 if 1 == i % 2 else 1
            weight: int = sign * math.comb(n, i)
            for r in range(n):
                row[r] += weight * math.comb(degree, r) * shift ** (degree - r)
        rows.append([float(scale * value) for value in row])
    return np.array(rows, dtype=np.float64)


class PiecewiseDensity:
    """
    Exact density of V_1 + ... + V_n for V_i iid uniform on [-sqrt(3), sqrt(3)].

    The density is a piecewise polynomial of degree n-1 with breakpoints at
    -n sqrt(3) + 2 sqrt(3) j; each piece is stored by its Taylor coefficients
    around the piece midpoint and evaluated with Horner's scheme.
    """

    def __init__(self, n: int):
        if n < 1 or n > MAX_EXACT_N:
            raise UnsupportedN(
                f"Exact density supports 1 <= n <= {MAX_EXACT_N} (got n={n}); use the Edgeworth"
                " backend beyond that."
            )
        self.n: int = n
        self.__coefficients: np.ndarray = _piece_coefficients(n)

    @property
    def breakpoints(self) -> np.ndarray:
        return (2.0 * np.arange(self.n + 1) - self.n) * SQRT3

    @property
    def half_width(self) -> float:
        return self.n * SQRT3

    def __call__(self, x: ArrayLike) -> ArrayLike:
        points: np.ndarray = np.atleast_1d(np.asarray(x, dtype=np.float64))
        t: np.ndarray = (points + self.half_width) / (2.0 * SQRT3)
        # Fold onto the lower half so the result is exactly even.
        t = np.minimum(t, self.n - t)
        inside: np.ndarray = (t >= 0.0) & np.isfinite(t)
        pieces: np.ndarray = np.clip(np.floor(np.where(inside, t, 0.0)), 0, self.n - 1).astype(int)
        u: np.ndarray = np.where(inside, t, 0.0) - pieces - 0.5
        values: np.ndarray = np.zeros_like(u)
        for r in range(self.n - 1, -1, -1):
            values = values * u + self.__coefficients[pieces, r]
        density: np.ndarray = np.where(inside, np.maximum(values, 0.0), 0.0) / (2.0 * SQRT3)
        if 0 == np.ndim(x):
            return float(density[0])
        return density

    def total_mass(self) -> float:
        """
        :return: Integral of the density from the stored polynomials.
        """
        powers: np.ndarray = np.arange(self.n)
        # Integral of u^r over [-1/2, 1/2].
        moments: np.ndarray = np.where(
            0 == powers % 2, 2.0 * 0.5 ** (powers + 1) / (powers + 1), 0.0
        )
        return float(math.fsum(self.__coefficients @ moments))


@lru_cache(maxsize=64)
def exact_density(n: int) -> PiecewiseDensity:
    return PiecewiseDensity(n)


def irwin_hall_density(n: int, x: ArrayLike) -> ArrayLike:
    """
    Exact density at x of the sum of n iid uniforms on [-sqrt(3), sqrt(3)].

    :raise UnsupportedN: If n > 40.
    """
    if n < 2:
        raise UnsupportedN(f"n must be at least 2, got {n}")
    return exact_density(n)(x)
