import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

import numpy as np

from intransitive_dice_lab.dice_core.interval import SQRT3
from intransitive_dice_lab.edgeworth.quadrature import VectorIntegrand, expect_uniform

logger: logging.Logger = logging.getLogger(__name__)

TOLERANCE: float = 1e-10


@dataclass(frozen=True)
class IntegralRow:
    """
    One uniform-moment identity: E[integrand] = rational * sqrt(3)^sqrt3_power.
    """

    label: str
    rational: Fraction
    sqrt3_power: int
    numeric: float

    @property
    def exact(self) -> float:
        return float(self.rational) * SQRT3**self.sqrt3_power

    @property
    def error(self) -> float:
        return abs(self.numeric - self.exact)

    @property
    def passed(self) -> bool:
        return self.error <= TOLERANCE

    def to_dict(self) -> Dict[str, object]:
        return {
            "label": self.label,
            "rational": str(self.rational),
            "sqrt3_power": self.sqrt3_power,
            "exact": self.exact,
            "numeric": self.numeric,
            "error": self.error,
            "passed": self.passed,
        }


def _max12(v: np.ndarray) -> np.ndarray:
    return np.maximum(v[:, 0], v[:, 1])


def _max13(v: np.ndarray) -> np.ndarray:
    return np.maximum(v[:, 0], v[:, 2])


# (label, number of variables, integrand, rational part, power of sqrt(3))
_IDENTITIES: List[Tuple[str, int, VectorIntegrand, Fraction, int]] = [
    ("E[V1^2]", 1, lambda v: v[:, 0] ** 2, Fraction(1), 0),
    ("E[V1^3]", 1, lambda v: v[:, 0] ** 3, Fraction(0), 0),
    ("E[V1^4]", 1, lambda v: v[:, 0] ** 4, Fraction(9, 5), 0),
    ("E[V1^6]", 1, lambda v: v[:, 0] ** 6, Fraction(27, 7), 0),
    ("E[max(V1,V2)]", 2, _max12, Fraction(1, 3), 1),
    ("E[max(V1,V2)^2]", 2, lambda v: _max12(v) ** 2, Fraction(1), 0),
    ("E[max(V1,V2) V1]", 2, lambda v: _max12(v) * v[:, 0], Fraction(1, 2), 0),
    ("E[max(V1,V2) V1^2]", 2, lambda v: _max12(v) * v[:, 0] ** 2, Fraction(2, 5), 1),
    ("E[max(V1,V2) V1^3]", 2, lambda v: _max12(v) * v[:, 0] ** 3, Fraction(9, 10), 0),
    ("E[max(V1,V2) V1^4]", 2, lambda v: _max12(v) * v[:, 0] ** 4, Fraction(27, 35), 1),
    ("E[max(V1,V2) V1 V2]", 2, lambda v: _max12(v) * v[:, 0] * v[:, 1], Fraction(-1, 5), 1),
    (
        "E[max(V1,V2) V1^2 V2]",
        2,
        lambda v: _max12(v) * v[:, 0] ** 2 * v[:, 1],
        Fraction(1, 2),
        0,
    ),
    (
        "E[max(V1,V2) V1^2 V2^2]",
        2,
        lambda v: _max12(v) * v[:, 0] ** 2 * v[:, 1] ** 2,
        Fraction(3, 7),
        1,
    ),
    ("E[max(V1,V2) max(V1,V3)]", 3, lambda v: _max12(v) * _max13(v), Fraction(3, 5), 0),
    (
        "E[max(V1,V2) max(V1,V3) V1^2]",
        3,
        lambda v: _max12(v) * _max13(v) * v[:, 0] ** 2,
        Fraction(33, 35),
        0,
    ),
    (
        "E[max(V1,V2) max(V1,V3) V2^2]",
        3,
        lambda v: _max12(v) * _max13(v) * v[:, 1] ** 2,
        Fraction(23, 35),
        0,
    ),
    (
        "E[max(V1,V2) max(V1,V3) V2 V3]",
        3,
        lambda v: _max12(v) * _max13(v) * v[:, 1] * v[:, 2],
        Fraction(13, 35),
        0,
    ),
]


def simple_integrals_table() -> List[IntegralRow]:
    """
    Evaluates every uniform-moment identity by split-domain Gauss-Legendre
    quadrature and pairs it with its exact value. On each ordering of the
    variables the integrands are polynomials, so the quadrature is exact up
    to rounding.
    """
    rows: List[IntegralRow] = []
    for label, k, integrand, rational, power in _IDENTITIES:
        row: IntegralRow = IntegralRow(label, rational, power, expect_uniform(integrand, k))
        if not row.passed:
            logger.error(f"{label}: quadrature {row.numeric} vs exact {row.exact}")
        rows.append(row)
    return rows
