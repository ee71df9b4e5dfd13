import math
from dataclasses import dataclass

from intransitive_dice_lab.errors import InvalidIntervalSpec

SQRT3: float = math.sqrt(3.0)


@dataclass(frozen=True)
class IntervalSpec:
    """
    The face interval [z1, z2] of an n-sided die.

    Three presets cover the conventions used throughout the lab: the unit
    interval [0, 1], the wide interval [0, n] and the symmetric interval
    [-sqrt(3), sqrt(3)] whose uniform law has unit variance.
    """

    z1: float
    z2: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.z1) and math.isfinite(self.z2)):
            raise InvalidIntervalSpec(f"Interval endpoints must be finite: [{self.z1}, {self.z2}]")
        if self.z1 >= self.z2:
            raise InvalidIntervalSpec(f"Empty interval: [{self.z1}, {self.z2}]")
        if self.n < 2:
            raise InvalidIntervalSpec(f"A die needs at least two faces, got n={self.n}")

    @classmethod
    def unit(cls, n: int) -> "IntervalSpec":
        return cls(0.0, 1.0, n)

    @classmethod
    def wide(cls, n: int) -> "IntervalSpec":
        return cls(0.0, float(n), n)

    @classmethod
    def symmetric(cls, n: int) -> "IntervalSpec":
        return cls(-SQRT3, SQRT3, n)

    @classmethod
    def custom(cls, z1: float, z2: float, n: int) -> "IntervalSpec":
        return cls(float(z1), float(z2), n)

    @property
    def length(self) -> float:
        return self.z2 - self.z1

    @property
    def balance_target(self) -> float:
        return self.n * (self.z1 + self.z2) / 2.0

    @property
    def var_h(self) -> float:
        """
        :return: Variance of a uniform roll on the interval.
        """
        return self.length * self.length / 12.0

    @property
    def balance_tolerance(self) -> float:
        return 1e-9 * self.n * max(1.0, abs(self.length))

    @property
    def is_symmetric(self) -> bool:
        return -SQRT3 == self.z1 and SQRT3 == self.z2

    @property
    def is_wide(self) -> bool:
        return 0.0 == self.z1 and float(self.n) == self.z2

    def contains(self, x: float) -> bool:
        return self.z1 <= x <= self.z2

    def cdf(self, x: float) -> float:
        """
        :return: F(x) of the uniform law on the interval, clamped to [0, 1].
        """
        return min(1.0, max(0.0, (x - self.z1) / self.length))

    def with_n(self, n: int) -> "IntervalSpec":
        """
        :return: The same preset for a different face count. Custom intervals
            keep their endpoints.
        """
        if self.is_wide:
            return IntervalSpec.wide(n)
        return IntervalSpec(self.z1, self.z2, n)

    def same_interval(self, other: "IntervalSpec") -> bool:
        return self.z1 == other.z1 and self.z2 == other.z2 and self.n == other.n

    def describe(self) -> str:
        if 0.0 == self.z1 and 1.0 == self.z2:
            return "unit"
        if self.is_wide:
            return "wide"
        if self.is_symmetric:
            return "symmetric"
        return f"custom:{self.z1!r},{self.z2!r}"
