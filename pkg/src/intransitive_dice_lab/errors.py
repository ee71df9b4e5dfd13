from typing import Tuple


class DiceLabError(Exception):
    """
    Base class of every error raised by the lab.
    """


class InvalidIntervalSpec(DiceLabError, ValueError):
    pass


class AttemptsExhausted(DiceLabError):
    """
    Raised when the balanced rejection sampler used up its attempt budget.
    """

    def __init__(self, attempts: int, n: int):
        super().__init__(attempts, n)
        self.attempts: int = attempts
        self.n: int = n

    def __str__(self) -> str:
        return f"Balanced sampler rejected {self.attempts} candidates in a row (n={self.n})."


class DimensionMismatch(DiceLabError, ValueError):
    pass


class IntervalMismatch(DiceLabError, ValueError):
    pass


class OutOfRange(DiceLabError, ValueError):
    pass


class UnsupportedInterval(DiceLabError, ValueError):
    pass


class NotBalanced(DiceLabError, ValueError):
    pass


class UnsupportedN(DiceLabError, ValueError):
    pass


class UnsupportedK(DiceLabError, ValueError):
    pass


class UnsupportedOrder(DiceLabError, ValueError):
    pass


class QuadratureBudgetExceeded(DiceLabError):
    pass


class DegenerateMoments(DiceLabError):
    pass


class EmptySeries(DiceLabError, ValueError):
    pass


class UsageError(DiceLabError):
    pass


class TaskFailure(DiceLabError):
    """
    Raised by the Monte Carlo engine when a trial task fails inside a worker.
    """

    def __init__(self, worker_index: int, message: str):
        super().__init__(worker_index, message)
        self.worker_index: int = worker_index
        self.message: str = message

    def __reduce__(self) -> Tuple[type, Tuple[int, str]]:
        return (TaskFailure, (self.worker_index, self.message))

    def __str__(self) -> str:
        return f"Worker {self.worker_index} failed: {self.message}"
