import itertools
import math
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import special

from intransitive_dice_lab.dice_core.interval import SQRT3
from intransitive_dice_lab.errors import QuadratureBudgetExceeded

# f maps an (N, k) array of points to N values.
VectorIntegrand = Callable[[np.ndarray], np.ndarray]

DEFAULT_BUDGET: int = 2_000_000


def default_nodes(k: int, split: bool) -> int:
    if split:
        return 24 if k <= 3 else 12
    return 64 if k <= 3 else 32


@lru_cache(maxsize=None)
def gauss_legendre(node_count: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    :return: Gauss-Legendre nodes and weights on [-1, 1].
    """
    nodes, weights = special.roots_legendre(node_count)
    return np.asarray(nodes, dtype=np.float64), np.asarray(weights, dtype=np.float64)


def _unit_rule(node_count: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    :return: Nodes and weights mapped to [0, 1].
    """
    nodes, weights = gauss_legendre(node_count)
    return (nodes + 1.0) / 2.0, weights / 2.0


def _product(values: np.ndarray, k: int) -> np.ndarray:
    """
    :return: All k-tuples of entries of `values` as an (m^k, k) array.
    """
    grids: List[np.ndarray] = np.meshgrid(*([values] * k), indexing="ij")
    return np.stack([grid.ravel() for grid in grids], axis=1)


def tensor_grid(
    lower: float, upper: float, k: int, node_count: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Product rule on the cube [lower, upper]^k.

    :return: An (m^k, k) array of points and their weights.
    """
    nodes, weights = _unit_rule(node_count)
    axis_points: np.ndarray = lower + (upper - lower) * nodes
    axis_weights: np.ndarray = (upper - lower) * weights
    return _product(axis_points, k), np.prod(_product(axis_weights, k), axis=1)


def simplex_grid(
    lower: float, upper: float, k: int, node_count: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Collapsed product rule on the ordered simplex lower <= y_1 <= ... <= y_k <= upper.

    The map y_1 = lower + (upper - lower) u_1, y_i = y_(i-1) + (upper - y_(i-1)) u_i
    takes the unit cube onto the simplex with Jacobian prod (upper - y_(i-1)),
    y_0 = lower. Polynomial integrands stay polynomial in u.
    """
    nodes, weights = _unit_rule(node_count)
    u: np.ndarray = _product(nodes, k)
    w: np.ndarray = np.prod(_product(weights, k), axis=1)
    points: np.ndarray = np.empty_like(u)
    jacobian: np.ndarray = np.ones(u.shape[0])
    previous: np.ndarray = np.full(u.shape[0], lower)
    for i in range(k):
        span: np.ndarray = upper - previous
        points[:, i] = previous + span * u[:, i]
        jacobian *= span
        previous = points[:, i]
    return points, w * jacobian


def evaluation_count(k: int, node_count: int, split: bool) -> int:
    count: int = node_count**k
    return count * math.factorial(k) if split else count


def expect_uniform(
    f: VectorIntegrand,
    k: int,
    node_count: Optional[int] = None,
    split: bool = True,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """
    E f(V_1, ..., V_k) for V_i iid uniform on [-sqrt(3), sqrt(3)].

    :param f: Vectorized integrand taking an (N, k) array.
    :param node_count: Gauss-Legendre nodes per axis; a default depending on k
        and `split` is used if None.
    :param split: Integrate separately over each of the k! orderings of the
        coordinates, which makes integrands that only kink on the diagonals
        v_i = v_j smooth on every piece.
    :param budget: Maximum number of integrand evaluations.
    :raise QuadratureBudgetExceeded: If the rule needs more than `budget` points.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if None is node_count:
        node_count = default_nodes(k, split)
    needed: int = evaluation_count(k, node_count, split)
    if needed > budget:
        raise QuadratureBudgetExceeded(
            f"{needed} evaluations needed (k={k}, nodes={node_count}, split={split}),"
            f" budget is {budget}"
        )

    volume: float = (2.0 * SQRT3) ** k
    if not split:
        points, weights = tensor_grid(-SQRT3, SQRT3, k, node_count)
        return float(np.dot(weights, f(points)) / volume)

    ordered, weights = simplex_grid(-SQRT3, SQRT3, k, node_count)
    total: float = 0.0
    for permutation in itertools.permutations(range(k)):
        permuted: np.ndarray = np.empty_like(ordered)
        permuted[:, list(permutation)] = ordered
        total += float(np.dot(weights, f(permuted)))
    return total / volume
