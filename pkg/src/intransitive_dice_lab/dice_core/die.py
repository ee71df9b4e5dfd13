import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from intransitive_dice_lab.dice_core.interval import IntervalSpec
from intransitive_dice_lab.errors import (
    AttemptsExhausted,
    DimensionMismatch,
    NotBalanced,
    OutOfRange,
)

logger: logging.Logger = logging.getLogger(__name__)

FaceInput = Union[Sequence[float], np.ndarray]


class Die:
    """
    An n-sided die with real faces on an interval.

    Faces are kept in insertion order together with a sorted copy used by the
    binary-search based operations. Both arrays are read-only.
    """

    def __init__(self, faces: FaceInput, spec: IntervalSpec, is_balanced: Optional[bool] = None):
        """
        :param faces: The n face values.
        :param spec: Interval the faces live on; spec.n must match len(faces).
        :param is_balanced: Whether the die is balanced. If None, it is detected
            from the face-sum. If True, the face-sum is validated.
        :raise DimensionMismatch: If the face count does not match spec.n.
        :raise OutOfRange: If a face lies outside the interval.
        :raise NotBalanced: If is_balanced is True but the face-sum check fails.
        """
        face_array: np.ndarray = np.array(faces, dtype=np.float64)
        if 1 != face_array.ndim or spec.n != face_array.shape[0]:
            raise DimensionMismatch(
                f"Expected {spec.n} faces, got array of shape {face_array.shape}"
            )
        if np.any(face_array < spec.z1) or np.any(face_array > spec.z2):
            raise OutOfRange(f"Faces must lie in [{spec.z1}, {spec.z2}]")

        face_array.setflags(write=False)
        sorted_faces: np.ndarray = np.sort(face_array)
        sorted_faces.setflags(write=False)

        self.__faces: np.ndarray = face_array
        self.__sorted_faces: np.ndarray = sorted_faces
        self.__spec: IntervalSpec = spec

        sum_is_balanced: bool = (
            abs(math.fsum(face_array) - spec.balance_target) <= spec.balance_tolerance
        )
        if None is is_balanced:
            is_balanced = sum_is_balanced
        elif is_balanced and not sum_is_balanced:
            raise NotBalanced(
                f"Face-sum {math.fsum(face_array)} differs from target {spec.balance_target}"
            )
        self.__is_balanced: bool = is_balanced

    @property
    def faces(self) -> np.ndarray:
        return self.__faces

    @property
    def sorted_faces(self) -> np.ndarray:
        return self.__sorted_faces

    @property
    def spec(self) -> IntervalSpec:
        return self.__spec

    @property
    def n(self) -> int:
        return self.__spec.n

    @property
    def is_balanced(self) -> bool:
        return self.__is_balanced

    def face_sum(self) -> float:
        return math.fsum(self.__faces)

    def __repr__(self) -> str:
        return (
            f"Die(n={self.n}, interval={self.__spec.describe()}, balanced={self.__is_balanced})"
        )


class BeatsResult(Enum):
    FirstWins = "first_wins"
    SecondWins = "second_wins"
    Draw = "draw"


@dataclass(frozen=True)
class BeatsOutcome:
    margin: int
    result: BeatsResult

    @classmethod
    def from_margin(cls, margin: int) -> "BeatsOutcome":
        if margin > 0:
            return cls(margin, BeatsResult.FirstWins)
        if margin < 0:
            return cls(margin, BeatsResult.SecondWins)
        return cls(0, BeatsResult.Draw)


def default_max_attempts(n: int) -> int:
    return 100 * math.ceil(math.sqrt(n))


def sample_iid(spec: IntervalSpec, rng: np.random.Generator) -> Die:
    """
    Draws a die whose faces are iid uniform on the interval.
    """
    return Die(rng.uniform(spec.z1, spec.z2, size=spec.n), spec, is_balanced=False)


def draw_balanced_faces(
    spec: IntervalSpec, rng: np.random.Generator, max_attempts: Optional[int] = None
) -> Tuple[np.ndarray, int]:
    """
    Rejection sampler for faces conditioned on the balance target.

    The first n-1 faces are drawn iid uniform and the last face is set to the
    balance target minus their sum; the candidate is accepted when the last
    face lands inside the interval. Candidates are generated in batches and
    the first accepted one in stream order is returned.

    :param spec: Interval spec.
    :param rng: Random stream.
    :param max_attempts: Number of candidates to try before giving up.
        Defaults to 100 * ceil(sqrt(n)).
    :return: A tuple of the accepted faces and the number of candidates tried.
    :raise AttemptsExhausted: If no candidate was accepted.
    """
    if None is max_attempts:
        max_attempts = default_max_attempts(spec.n)
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be positive, got {max_attempts}")

    free_count: int = spec.n - 1
    batch_size: int = max(8, 4 * math.ceil(math.sqrt(spec.n)))
    attempts: int = 0
    while attempts < max_attempts:
        current_batch: int = min(batch_size, max_attempts - attempts)
        candidates: np.ndarray = rng.uniform(spec.z1, spec.z2, size=(current_batch, free_count))
        last_faces: np.ndarray = spec.balance_target - candidates.sum(axis=1)
        accepted: np.ndarray = np.flatnonzero((last_faces >= spec.z1) & (last_faces <= spec.z2))
        if 0 == len(accepted):
            attempts += current_batch
            continue

        row: int = int(accepted[0])
        attempts += row + 1
        free_faces: np.ndarray = candidates[row]
        last_face: float = spec.balance_target - math.fsum(free_faces)
        # The pairwise sum used for screening may disagree with fsum in the last ulp.
        last_face = min(spec.z2, max(spec.z1, last_face))
        return np.append(free_faces, last_face), attempts

    logger.error(f"Balanced sampler exhausted {max_attempts} attempts at n={spec.n}.")
    raise AttemptsExhausted(max_attempts, spec.n)


def sample_balanced(
    spec: IntervalSpec, rng: np.random.Generator, max_attempts: Optional[int] = None
) -> Die:
    faces, _ = draw_balanced_faces(spec, rng, max_attempts)
    return Die(faces, spec, is_balanced=True)


def sample_balanced_batch(
    spec: IntervalSpec, rng: np.random.Generator, count: int, max_attempts: Optional[int] = None
) -> np.ndarray:
    """
    :return: A (count, n) array whose rows are independent balanced face
        vectors. Also used for roll vectors conditioned on the face-sum.
    """
    rows: np.ndarray = np.empty((count, spec.n), dtype=np.float64)
    for i in range(count):
        rows[i], _ = draw_balanced_faces(spec, rng, max_attempts)
    return rows


def _check_same_n(first: Die, second: Die) -> None:
    if first.n != second.n:
        raise DimensionMismatch(f"Face counts differ: {first.n} vs {second.n}")


def _outcome(margin: int, first: Die, second: Die) -> BeatsOutcome:
    if (
        0 == margin
        and 1 == first.n % 2
        and first.is_balanced
        and second.is_balanced
        and first is not second
    ):
        logger.warning(
            f"Draw between balanced dice with odd n={first.n}; this indicates tied faces."
        )
    return BeatsOutcome.from_margin(margin)


def beats_naive(first: Die, second: Die) -> BeatsOutcome:
    """
    Margin of the first die over the second by comparing every pair of faces.
    """
    _check_same_n(first, second)
    signs: np.ndarray = np.sign(first.faces[:, np.newaxis] - second.faces[np.newaxis, :])
    margin: int = int(signs.astype(np.int64).sum())
    return _outcome(margin, first, second)


def beats_fast(first: Die, second: Die) -> BeatsOutcome:
    """
    Same margin as `beats_naive`, counting via binary search over the sorted
    faces of the second die.
    """
    _check_same_n(first, second)
    other: np.ndarray = second.sorted_faces
    below: np.ndarray = np.searchsorted(other, first.faces, side="left")
    above: np.ndarray = first.n - np.searchsorted(other, first.faces, side="right")
    margin: int = int(below.sum()) - int(above.sum())
    return _outcome(margin, first, second)


def margin_of(first_sorted: np.ndarray, second_sorted: np.ndarray) -> int:
    """
    Margin between two raw sorted face vectors; the hot path used by tournament
    trials, which skip Die construction.
    """
    n: int = first_sorted.shape[0]
    below: np.ndarray = np.searchsorted(second_sorted, first_sorted, side="left")
    above: np.ndarray = n - np.searchsorted(second_sorted, first_sorted, side="right")
    return int(below.sum()) - int(above.sum())


def rescale(die: Die, target: IntervalSpec) -> Die:
    """
    Maps a die onto another interval by the increasing affine bijection.
    """
    if target.n != die.n:
        raise DimensionMismatch(f"Target interval has n={target.n}, die has n={die.n}")
    source: IntervalSpec = die.spec
    ratio: float = target.length / source.length
    mapped: np.ndarray = target.z1 + (die.faces - source.z1) * ratio
    mapped = np.clip(mapped, target.z1, target.z2)
    return Die(mapped, target, is_balanced=die.is_balanced)


def f_count(die: Die, x: float) -> int:
    """
    :return: Number of faces less than or equal to x.
    """
    return int(np.searchsorted(die.sorted_faces, x, side="right"))


def roll_win_probability(first: Die, second: Die) -> float:
    """
    :return: Probability that one roll of the first die shows a strictly larger
        number than one roll of the second.
    """
    _check_same_n(first, second)
    wins: int = int(np.searchsorted(second.sorted_faces, first.faces, side="left").sum())
    return wins / float(first.n * first.n)


def efron_dice() -> Tuple[Die, Die, Die, Die]:
    """
    :return: Efron's four six-sided dice, each beating the next in a cycle.
    """
    spec: IntervalSpec = IntervalSpec.custom(0.0, 6.0, 6)
    return (
        Die([0, 0, 4, 4, 4, 4], spec),
        Die([3, 3, 3, 3, 3, 3], spec),
        Die([2, 2, 2, 2, 6, 6], spec),
        Die([1, 1, 1, 5, 5, 5], spec),
    )
