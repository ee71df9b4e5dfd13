import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np
from scipy.special import bernoulli

from intransitive_dice_lab.dice_core.interval import SQRT3
from intransitive_dice_lab.errors import UnsupportedOrder

ArrayLike = Union[float, np.ndarray]

INV_SQRT_2PI: float = 1.0 / math.sqrt(2.0 * math.pi)
SUPPORTED_ORDERS: Tuple[int, ...] = (0, 2, 4)
MAX_NU: int = 8


@dataclass(frozen=True)
class CumulantSet:
    """
    Cumulants of the uniform law on [-sqrt(3), sqrt(3)].

    gamma[k] = (2 sqrt(3))^k B_k / k for even k >= 2 with B_k the Bernoulli
    numbers, and 0 for odd k. Gamma_k = gamma_k / k!.
    """

    max_order: int = MAX_NU + 2
    gamma: Dict[int, float] = field(init=False, compare=False, hash=False, repr=False)

    def __post_init__(self) -> None:
        bernoulli_numbers: np.ndarray = bernoulli(self.max_order)
        gamma: Dict[int, float] = {1: 0.0}
        for k in range(2, self.max_order + 1):
            if 1 == k % 2:
                gamma[k] = 0.0
            else:
                gamma[k] = (2.0 * SQRT3) ** k * float(bernoulli_numbers[k]) / k
        object.__setattr__(self, "gamma", gamma)

    def Gamma(self, k: int) -> float:
        if k > self.max_order:
            raise UnsupportedOrder(f"Cumulant order {k} exceeds {self.max_order}")
        return self.gamma[k] / math.factorial(k)


UNIFORM_CUMULANTS: CumulantSet = CumulantSet()

# Coefficients of the expanded density of the plain sum.
A_COEF: float = 3.0 * UNIFORM_CUMULANTS.Gamma(4)
C_COEF: float = -15.0 * UNIFORM_CUMULANTS.Gamma(6) + 52.5 * UNIFORM_CUMULANTS.Gamma(4) ** 2
E_COEF: float = -6.0 * UNIFORM_CUMULANTS.Gamma(4)


def hermite(m: int, x: ArrayLike) -> ArrayLike:
    """
    Probabilists' Hermite polynomial He_m(x) by the three-term recurrence.
    """
    if m < 0:
        raise ValueError(f"Hermite degree must be non-negative, got {m}")
    previous: ArrayLike = np.ones_like(x, dtype=np.float64) if isinstance(x, np.ndarray) else 1.0
    if 0 == m:
        return previous
    current: ArrayLike = x
    for degree in range(1, m):
        previous, current = current, x * current - degree * previous
    return current


def _solutions(nu: int) -> Iterator[Tuple[int, ...]]:
    """
    Yields every (k_1, ..., k_nu) of non-negative integers with
    k_1 + 2 k_2 + ... + nu k_nu = nu.
    """

    def _search(m: int, remaining: int, prefix: List[int]) -> Iterator[Tuple[int, ...]]:
        if m > nu:
            if 0 == remaining:
                yield tuple(prefix)
            return
        for count in range(remaining // m + 1):
            prefix.append(count)
            yield from _search(m + 1, remaining - m * count, prefix)
            prefix.pop()

    yield from _search(1, nu, [])


@lru_cache(maxsize=None)
def _q_terms(nu: int, cumulants: CumulantSet) -> Tuple[Tuple[int, float], ...]:
    """
    :return: (Hermite degree, coefficient) pairs of q_nu with zero terms dropped.
    """
    terms: Dict[int, float] = {}
    for ks in _solutions(nu):
        coefficient: float = 1.0
        for m, count in enumerate(ks, start=1):
            if 0 == count:
                continue
            coefficient *= cumulants.Gamma(m + 2) ** count / math.factorial(count)
        if 0.0 == coefficient:
            continue
        degree: int = nu + 2 * sum(ks)
        terms[degree] = terms.get(degree, 0.0) + coefficient
    return tuple(sorted(terms.items()))


def q_nu(nu: int, x: ArrayLike, cumulants: CumulantSet = UNIFORM_CUMULANTS) -> ArrayLike:
    """
    Correction term of order n^(-nu/2) in the Edgeworth expansion.
    """
    if nu < 1:
        raise ValueError(f"nu must be at least 1, got {nu}")
    if nu > MAX_NU:
        raise UnsupportedOrder(f"q_nu is supported up to nu={MAX_NU}, got {nu}")
    total: ArrayLike = 0.0 * x
    for degree, coefficient in _q_terms(nu, cumulants):
        total = total + coefficient * hermite(degree, x)
    return INV_SQRT_2PI * np.exp(-0.5 * x * x) * total


def _check_order(order: int) -> None:
    if order not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"order must be one of {SUPPORTED_ORDERS}, got {order}")


def edgeworth_density(n: int, x: ArrayLike, order: int) -> ArrayLike:
    """
    Density of the normalized sum n^(-1/2) (V_1 + ... + V_n) of uniforms on
    [-sqrt(3), sqrt(3)], truncated after q_order.
    """
    _check_order(order)
    value: ArrayLike = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    for nu in range(1, order + 1):
        value = value + q_nu(nu, x) / n ** (nu / 2.0)
    return value


def scaled_density(n: int, x: ArrayLike, order: int, form: str = "polynomial") -> ArrayLike:
    """
    Approximate density of the plain sum V_1 + ... + V_n.

    :param form: "hermite" rescales `edgeworth_density`; "polynomial" uses the
        expansion 1 + A/n - x^2/2n + (C - A x^2/2 + E x^2 + x^4/8)/n^2 around
        the centre, truncated at `order`.
    """
    _check_order(order)
    if "hermite" == form:
        return edgeworth_density(n, x / math.sqrt(n), order) / math.sqrt(n)
    if "polynomial" != form:
        raise ValueError(f"Unknown form {form!r}")
    x2: ArrayLike = x * x
    bracket: ArrayLike = 1.0 + 0.0 * x
    if order >= 2:
        bracket = bracket + A_COEF / n - x2 / (2.0 * n)
    if order >= 4:
        bracket = bracket + (C_COEF - A_COEF * x2 / 2.0 + E_COEF * x2 + x2 * x2 / 8.0) / (n * n)
    return bracket / math.sqrt(2.0 * math.pi * n)


class EdgeworthDensity:
    """
    The truncated expansion at a fixed n and order, caching the q_nu terms.
    """

    def __init__(self, n: int, order: int):
        _check_order(order)
        self.n: int = n
        self.order: int = order
        self.__terms: List[Tuple[int, Tuple[Tuple[int, float], ...]]] = [
            (nu, _q_terms(nu, UNIFORM_CUMULANTS)) for nu in range(1, order + 1)
        ]

    def __call__(self, x: ArrayLike) -> ArrayLike:
        correction: ArrayLike = 1.0 + 0.0 * x
        for nu, terms in self.__terms:
            for degree, coefficient in terms:
                correction = correction + coefficient * hermite(degree, x) / self.n ** (nu / 2.0)
        return INV_SQRT_2PI * np.exp(-0.5 * x * x) * correction

    def of_sum(self, x: ArrayLike) -> ArrayLike:
        """
        Density of the plain sum at x.
        """
        root: float = math.sqrt(self.n)
        return self(x / root) / root
