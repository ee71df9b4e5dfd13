import math
from dataclasses import dataclass
from typing import Dict, Iterable, Union

import numpy as np


@dataclass(frozen=True)
class EstimateReport:
    point: float
    se: float
    ci_low: float
    ci_high: float
    trials: int

    def to_dict(self) -> Dict[str, Union[float, int]]:
        return {
            "point": self.point,
            "se": self.se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "trials": self.trials,
        }


class Accumulator:
    """
    Streaming count, mean and central power sums up to the fourth order.

    Two accumulators built over disjoint samples can be merged with `combine`;
    the empty accumulator is the identity of the merge.
    """

    def __init__(self) -> None:
        self.count: int = 0
        self.total: float = 0.0
        self.mean: float = 0.0
        self.m2: float = 0.0
        self.m3: float = 0.0
        self.m4: float = 0.0
        self.min: float = math.inf
        self.max: float = -math.inf

    def push(self, x: float) -> None:
        """
        Adds one sample with the one-pass update of all four power sums.
        """
        n1: int = self.count
        self.count += 1
        n: int = self.count
        delta: float = x - self.mean
        delta_n: float = delta / n
        delta_n2: float = delta_n * delta_n
        term1: float = delta * delta_n * n1
        self.mean += delta_n
        self.m4 += (
            term1 * delta_n2 * (n * n - 3 * n + 3)
            + 6 * delta_n2 * self.m2
            - 4 * delta_n * self.m3
        )
        self.m3 += term1 * delta_n * (n - 2) - 3 * delta_n * self.m2
        self.m2 += term1
        self.total += x
        if x < self.min:
            self.min = x
        if x > self.max:
            self.max = x

    def push_many(self, values: Union[np.ndarray, Iterable[float]]) -> None:
        """
        Adds a batch of samples by summarizing it with exact two-pass central
        sums and merging the summary in.
        """
        batch: np.ndarray = np.asarray(values, dtype=np.float64).ravel()
        if 0 == batch.shape[0]:
            return
        summary: Accumulator = Accumulator()
        summary.count = int(batch.shape[0])
        summary.total = math.fsum(batch)
        summary.mean = summary.total / summary.count
        centered: np.ndarray = batch - summary.mean
        squared: np.ndarray = centered * centered
        summary.m2 = float(squared.sum())
        summary.m3 = float((squared * centered).sum())
        summary.m4 = float((squared * squared).sum())
        summary.min = float(batch.min())
        summary.max = float(batch.max())
        merged: Accumulator = combine(self, summary)
        self.__dict__.update(merged.__dict__)

    def copy(self) -> "Accumulator":
        duplicate: Accumulator = Accumulator()
        duplicate.__dict__.update(self.__dict__)
        return duplicate

    def variance(self) -> float:
        """
        :return: Unbiased sample variance, or 0 with fewer than two samples.
        """
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    def std(self) -> float:
        return math.sqrt(max(0.0, self.variance()))

    def sem(self) -> float:
        if 0 == self.count:
            return 0.0
        return self.std() / math.sqrt(self.count)

    def skewness(self) -> float:
        if 0.0 == self.m2:
            return 0.0
        return math.sqrt(self.count) * self.m3 / self.m2**1.5

    def kurtosis(self) -> float:
        """
        :return: Non-excess kurtosis; 3 for a Gaussian sample.
        """
        if 0.0 == self.m2:
            return 0.0
        return self.count * self.m4 / (self.m2 * self.m2)

    def second_moment(self) -> float:
        """
        :return: Sample mean of x^2.
        """
        if 0 == self.count:
            return 0.0
        return self.m2 / self.count + self.mean * self.mean

    def estimate(self, z: float = 1.96) -> EstimateReport:
        se: float = self.sem()
        return EstimateReport(
            point=self.mean,
            se=se,
            ci_low=self.mean - z * se,
            ci_high=self.mean + z * se,
            trials=self.count,
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance(),
            "sem": self.sem(),
            "min": self.min if self.count > 0 else 0.0,
            "max": self.max if self.count > 0 else 0.0,
        }


def combine(a: Accumulator, b: Accumulator) -> Accumulator:
    """
    Merges the summaries of two disjoint samples.

    :return: A new accumulator; neither argument is modified.
    """
    if 0 == b.count:
        return a.copy()
    if 0 == a.count:
        return b.copy()

    na: float = float(a.count)
    nb: float = float(b.count)
    n: float = na + nb
    delta: float = b.mean - a.mean
    delta2: float = delta * delta
    delta3: float = delta2 * delta
    delta4: float = delta2 * delta2

    merged: Accumulator = Accumulator()
    merged.count = a.count + b.count
    merged.total = a.total + b.total
    merged.mean = a.mean + delta * nb / n
    merged.m2 = a.m2 + b.m2 + delta2 * na * nb / n
    merged.m3 = (
        a.m3
        + b.m3
        + delta3 * na * nb * (na - nb) / (n * n)
        + 3.0 * delta * (na * b.m2 - nb * a.m2) / n
    )
    merged.m4 = (
        a.m4
        + b.m4
        + delta4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
        + 6.0 * delta2 * (na * na * b.m2 + nb * nb * a.m2) / (n * n)
        + 4.0 * delta * (na * b.m3 - nb * a.m3) / n
    )
    merged.min = min(a.min, b.min)
    merged.max = max(a.max, b.max)
    return merged


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> EstimateReport:
    """
    Wilson score interval for a binomial proportion.

    :param successes: Number of successes, 0 <= successes <= trials.
    :param trials: Number of Bernoulli trials, at least 1.
    :param z: Normal quantile of the confidence level.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if successes < 0 or successes > trials:
        raise ValueError(f"successes must lie in [0, {trials}], got {successes}")

    p: float = successes / trials
    z2_over_n: float = z * z / trials
    denominator: float = 1.0 + z2_over_n
    center: float = (p + z2_over_n / 2.0) / denominator
    half_width: float = (
        z * math.sqrt(p * (1.0 - p) / trials + z2_over_n / (4.0 * trials)) / denominator
    )
    ci_low: float = 0.0 if 0 == successes else min(p, max(0.0, center - half_width))
    ci_high: float = 1.0 if trials == successes else max(p, min(1.0, center + half_width))
    return EstimateReport(
        point=p,
        se=math.sqrt(p * (1.0 - p) / trials),
        ci_low=ci_low,
        ci_high=ci_high,
        trials=trials,
    )
