import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from intransitive_dice_lab.dice_core.interval import SQRT3
from intransitive_dice_lab.edgeworth.expansion import (
    A_COEF,
    C_COEF,
    E_COEF,
    ArrayLike,
    EdgeworthDensity,
)
from intransitive_dice_lab.edgeworth.irwin_hall import MAX_EXACT_N, exact_density
from intransitive_dice_lab.edgeworth.quadrature import (
    DEFAULT_BUDGET,
    VectorIntegrand,
    expect_uniform,
)
from intransitive_dice_lab.errors import UnsupportedK, UnsupportedOrder

logger: logging.Logger = logging.getLogger(__name__)

# p_{n-k}(x) = 1 + (a + b x^2)/n + (c + d x^2 + e x^4)/n^2 + O(n^-3), keyed by k as
# (a, b, c, d, e). Only the 1/n coefficients are known for k = 3, 4.
CLOSED_COEFFICIENTS: Dict[int, Tuple[float, ...]] = {
    1: (1.0 / 2.0, -1.0 / 2.0, 9.0 / 40.0, -9.0 / 20.0, 1.0 / 8.0),
    2: (1.0, -1.0 / 2.0, 6.0 / 5.0, -6.0 / 5.0, 1.0 / 8.0),
    3: (3.0 / 2.0, -1.0 / 2.0),
    4: (2.0, -1.0 / 2.0),
}

BACKENDS: Tuple[str, ...] = ("auto", "exact", "edgeworth")


def max_closed_order(k: int) -> int:
    """
    :return: Highest power of 1/n available in closed form for p_{n-k}.
    """
    if k not in CLOSED_COEFFICIENTS:
        raise UnsupportedK(f"k must be in 1..4, got {k}")
    return 2 if 5 == len(CLOSED_COEFFICIENTS[k]) else 1


def correction_coefficients(k: int) -> Tuple[float, float, float, float, float]:
    """
    Derives the 1/n and 1/n^2 coefficients of p_{n-k} from the expansion of
    the density of the plain sum and its normaliser over k free uniforms.

    :return: (a, b, c, d, e) in the layout of CLOSED_COEFFICIENTS.
    """
    if k < 1:
        raise UnsupportedK(f"k must be positive, got {k}")
    # Density bracket: 1 + A/n - x^2/2n + (kA + C)/n^2 + (2E - A - k) x^2/2n^2 + x^4/8n^2.
    # Normaliser bracket: 1 + alpha/n + beta/n^2.
    alpha: float = A_COEF - k / 2.0
    beta: float = k * A_COEF / 2.0 + C_COEF + k * E_COEF - (6.0 * k + 5.0 * k * k) / 40.0
    constant: float = (k * A_COEF + C_COEF) - A_COEF * alpha + alpha * alpha - beta
    quadratic: float = (2.0 * E_COEF - A_COEF - k) / 2.0 + alpha / 2.0
    return (k / 2.0, -0.5, constant, quadratic, 1.0 / 8.0)


def correction_factor_closed(
    n: int, k: int, x: ArrayLike, order: Optional[int] = None
) -> ArrayLike:
    """
    Closed-form correction factor p_{n-k}(x).

    :param order: Highest power of 1/n to keep (1 or 2). Defaults to the
        highest available: 2 for k in {1, 2}, 1 for k in {3, 4}.
    :raise UnsupportedK: If k is not in 1..4.
    :raise UnsupportedOrder: If `order` is not available for k.
    """
    available: int = max_closed_order(k)
    if None is order:
        order = available
    if order < 1 or order > available:
        raise UnsupportedOrder(f"p_(n-{k}) is known up to 1/n^{available}, got order {order}")
    coefficients: Tuple[float, ...] = CLOSED_COEFFICIENTS[k]
    x2: ArrayLike = x * x
    value: ArrayLike = 1.0 + (coefficients[0] + coefficients[1] * x2) / n
    if 2 == order:
        value = value + (coefficients[2] + coefficients[3] * x2 + coefficients[4] * x2 * x2) / (
            n * n
        )
    return value


def _resolve_backend(free: int, backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"Unknown backend {backend!r}, expected one of {BACKENDS}")
    if "auto" == backend:
        return "exact" if free <= MAX_EXACT_N else "edgeworth"
    return backend


def _sum_density(free: int, backend: str) -> Callable[[np.ndarray], np.ndarray]:
    if "exact" == _resolve_backend(free, backend):
        density = exact_density(free)
        return lambda s: np.asarray(density(s))
    expansion: EdgeworthDensity = EdgeworthDensity(free, 4)
    return lambda s: np.asarray(expansion.of_sum(s))


@lru_cache(maxsize=256)
def correction_normaliser(
    n: int,
    k: int,
    backend: str = "auto",
    node_count: Optional[int] = None,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """
    E phi_{n-k}(V_1 + ... + V_k) by Gauss-Legendre tensor quadrature, where
    phi_m is the density of the sum of m free uniforms.
    """
    if k < 1 or k > 4:
        raise UnsupportedK(f"k must be in 1..4, got {k}")
    density: Callable[[np.ndarray], np.ndarray] = _sum_density(n - k, backend)
    integrand: VectorIntegrand = lambda points: density(points.sum(axis=1))
    return expect_uniform(integrand, k, node_count=node_count, split=False, budget=budget)


def correction_factor_direct(
    n: int,
    k: int,
    x: ArrayLike,
    backend: str = "auto",
    node_count: Optional[int] = None,
    budget: int = DEFAULT_BUDGET,
) -> ArrayLike:
    """
    p_{n-k}(x) as the ratio of the density of the sum of n-k free faces at x
    to its average over k free uniform faces.

    :param backend: "exact" uses the piecewise-polynomial density (n-k <= 40),
        "edgeworth" the order-4 expansion, "auto" picks exact when possible.
    :raise QuadratureBudgetExceeded: If the normaliser quadrature is too large.
    """
    if n - k < 1:
        raise ValueError(f"n={n} leaves no free faces for k={k}")
    density: Callable[[np.ndarray], np.ndarray] = _sum_density(n - k, backend)
    normaliser: float = correction_normaliser(n, k, backend, node_count, budget)
    values: np.ndarray = density(np.atleast_1d(np.asarray(x, dtype=np.float64))) / normaliser
    if 0 == np.ndim(x):
        return float(values[0])
    return values


def _validate_layout(k: int, layout: Sequence[int]) -> Tuple[int, ...]:
    groups: Tuple[int, ...] = tuple(int(g) for g in layout)
    if 0 == len(groups) or any(g < 1 for g in groups):
        raise UnsupportedK(f"Invalid face layout {layout}")
    if sum(groups) != k:
        raise UnsupportedK(f"Layout {layout} does not cover k={k} faces")
    if k > 4 or max(groups) > 4:
        raise UnsupportedK(f"At most four faces are supported, got layout {layout}")
    return groups


def conditional_expect(
    f: VectorIntegrand,
    k: int,
    n: int,
    layout: Optional[Sequence[int]] = None,
    backend: str = "closed",
    node_count: Optional[int] = None,
    split: bool = True,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """
    Expectation of f over faces of random balanced dice on the symmetric
    interval, computed as E[f(V) * prod_g p_{n-g}(sum of group g)] over iid
    uniforms V.

    :param f: Vectorized integrand of k faces, taking an (N, k) array.
    :param k: Number of faces, at most 4.
    :param n: Face count of the dice.
    :param layout: Sizes of consecutive face groups that belong to the same die,
        e.g. (2, 1) for f(a_1, a_2, b_1). Defaults to all k faces on one die.
    :param backend: "closed" uses the closed-form correction factors; "exact",
        "edgeworth" and "auto" use `correction_factor_direct`.
    :raise QuadratureBudgetExceeded: If the quadrature rule is too large.
    """
    groups: Tuple[int, ...] = _validate_layout(k, (k,) if None is layout else layout)
    if "closed" != backend:
        _resolve_backend(n - max(groups), backend)

    def _weighted(points: np.ndarray) -> np.ndarray:
        weight: np.ndarray = np.ones(points.shape[0])
        start: int = 0
        for group in groups:
            group_sum: np.ndarray = points[:, start : start + group].sum(axis=1)
            if "closed" == backend:
                weight = weight * correction_factor_closed(n, group, group_sum)
            else:
                weight = weight * correction_factor_direct(
                    n, group, group_sum, backend, budget=budget
                )
            start += group
        return np.asarray(f(points)) * weight

    return expect_uniform(_weighted, k, node_count=node_count, split=split, budget=budget)


@dataclass(frozen=True)
class ExpectationRow:
    label: str
    computed: float
    asymptotic: float
    error_order: int
    within: bool

    def to_dict(self) -> Dict[str, object]:
        return dict(self.__dict__)


def _mx(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.maximum(a, b)


def expectation_table(n: int, slack: float = 20.0) -> List[ExpectationRow]:
    """
    Conditional expectations of simple face statistics of random balanced
    dice next to their asymptotic expansions in 1/n.

    A row is `within` when the two agree to slack * n^-(error_order).
    """
    root3: float = SQRT3
    # (label, layout, integrand, asymptotic value, error order)
    cases: List[Tuple[str, Tuple[int, ...], VectorIntegrand, float, int]] = [
        (
            "E[a1^2]",
            (1,),
            lambda v: v[:, 0] ** 2,
            1.0 - 2.0 / (5 * n) - 18.0 / (175 * n * n),
            3,
        ),
        (
            "E[a1^2 a2^2]",
            (2,),
            lambda v: v[:, 0] ** 2 * v[:, 1] ** 2,
            1.0 - 4.0 / (5 * n) + 48.0 / (175 * n * n),
            3,
        ),
        (
            "E[max(a1,b1)]",
            (1, 1),
            lambda v: _mx(v[:, 0], v[:, 1]),
            root3 / 3.0 * (1.0 - 1.0 / (5 * n) - 2.0 / (25 * n * n)),
            3,
        ),
        (
            "E[max(a1,b1) max(a2,b2)]",
            (2, 2),
            lambda v: _mx(v[:, 0], v[:, 2]) * _mx(v[:, 1], v[:, 3]),
            (1.0 - 19.0 / (10 * n) - 31.0 / (50 * n * n)) / 3.0,
            3,
        ),
        (
            "E[a1^2 max(a2,b1)]",
            (2, 1),
            lambda v: v[:, 0] ** 2 * _mx(v[:, 1], v[:, 2]),
            root3 / 3.0 * (1.0 - 3.0 / (5 * n) - 4.0 / (175 * n * n)),
            3,
        ),
        (
            "E[max(a1,a2)]",
            (2,),
            lambda v: _mx(v[:, 0], v[:, 1]),
            root3 / 3.0 * (1.0 + 2.0 / (5 * n)),
            2,
        ),
        (
            "E[a1^2 max(a2,a3)]",
            (3,),
            lambda v: v[:, 0] ** 2 * _mx(v[:, 1], v[:, 2]),
            root3 / 3.0,
            2,
        ),
        (
            "E[max(a1,a2) max(a3,a4)]",
            (4,),
            lambda v: _mx(v[:, 0], v[:, 1]) * _mx(v[:, 2], v[:, 3]),
            (1.0 - 11.0 / (5 * n)) / 3.0,
            2,
        ),
        (
            "E[a1^4]",
            (1,),
            lambda v: v[:, 0] ** 4,
            9.0 / 5.0 * (1.0 - 4.0 / (7 * n)),
            2,
        ),
        (
            "E[max(a1,b1) max(a1,b2)]",
            (2, 1),
            lambda v: _mx(v[:, 2], v[:, 0]) * _mx(v[:, 2], v[:, 1]),
            3.0 / 5.0 * (1.0 - 1.0 / n),
            2,
        ),
        (
            "E[a1^2 max(a1,b1)]",
            (1, 1),
            lambda v: v[:, 0] ** 2 * _mx(v[:, 0], v[:, 1]),
            2.0 * root3 / 5.0 * (1.0 - 1.0 / (2 * n)),
            2,
        ),
        ("E[max(a1,a2)^2]", (2,), lambda v: _mx(v[:, 0], v[:, 1]) ** 2, 1.0, 1),
        (
            "E[max(a1,a2) max(a1,a3)]",
            (3,),
            lambda v: _mx(v[:, 0], v[:, 1]) * _mx(v[:, 0], v[:, 2]),
            3.0 / 5.0,
            1,
        ),
        (
            "E[a1^2 max(a1,a2)]",
            (2,),
            lambda v: v[:, 0] ** 2 * _mx(v[:, 0], v[:, 1]),
            2.0 * root3 / 5.0,
            1,
        ),
        ("E[max(a1,b1)^2]", (1, 1), lambda v: _mx(v[:, 0], v[:, 1]) ** 2, 1.0, 1),
    ]
    rows: List[ExpectationRow] = []
    for label, layout, integrand, asymptotic, error_order in cases:
        computed: float = conditional_expect(integrand, sum(layout), n, layout=layout)
        within: bool = abs(computed - asymptotic) <= slack * float(n) ** (-error_order)
        if not within:
            logger.warning(f"{label} at n={n}: {computed} vs {asymptotic}")
        rows.append(ExpectationRow(label, computed, asymptotic, error_order, within))
    return rows
