import logging
import multiprocessing
import time
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from typing_extensions import Protocol

from intransitive_dice_lab.errors import TaskFailure
from intransitive_dice_lab.mc_engine.accumulator import Accumulator, combine

logger: logging.Logger = logging.getLogger(__name__)


class TrialTask(Protocol):
    """
    A trial is a pure function of the worker's random stream and the global
    trial index, returning named observations to accumulate.

    Tasks must be picklable to run with more than one worker.
    """

    def __call__(self, rng: np.random.Generator, trial_index: int) -> Mapping[str, float]: ...


@dataclass(frozen=True)
class RngStream:
    """
    Index-addressable PCG64 stream derived from SeedSequence([seed, index]).
    """

    seed: int
    stream_index: int

    def generator(self) -> np.random.Generator:
        if self.seed < 0 or self.stream_index < 0:
            raise ValueError("seed and stream_index must be non-negative")
        return np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed, self.stream_index]))
        )


def derive_seed(seed: int, index: int) -> int:
    """
    :return: An independent 64-bit seed for sub-experiment `index`, so
        experiments that run the engine repeatedly do not reuse streams.
    """
    # The spawn key keeps derived seeds apart from the RngStream(seed, index) streams.
    sequence: np.random.SeedSequence = np.random.SeedSequence([seed, index], spawn_key=(1,))
    state: np.ndarray = sequence.generate_state(1, np.uint64)
    return int(state[0])


def partition_trials(trials: int, workers: int) -> List[Tuple[int, int]]:
    """
    Splits [0, trials) into `workers` contiguous blocks whose sizes differ by
    at most one; earlier blocks get the extra trials.

    :return: A list of (start, stop) pairs, one per worker. Blocks may be empty.
    """
    base, extra = divmod(trials, workers)
    blocks: List[Tuple[int, int]] = []
    start: int = 0
    for worker_index in range(workers):
        size: int = base + (1 if worker_index < extra else 0)
        blocks.append((start, start + size))
        start += size
    return blocks


def _run_block(
    task: TrialTask, seed: int, worker_index: int, start: int, stop: int
) -> Dict[str, Accumulator]:
    accumulators: Dict[str, Accumulator] = {}
    try:
        rng: np.random.Generator = RngStream(seed, worker_index).generator()
        for trial_index in range(start, stop):
            for key, value in task(rng, trial_index).items():
                accumulator: Optional[Accumulator] = accumulators.get(key)
                if None is accumulator:
                    accumulator = Accumulator()
                    accumulators[key] = accumulator
                accumulator.push(float(value))
    except TaskFailure:
        raise
    except Exception as e:
        raise TaskFailure(worker_index, f"{type(e).__name__}: {e}") from None
    return accumulators


def _run_block_star(args: Tuple[TrialTask, int, int, int, int]) -> Dict[str, Accumulator]:
    return _run_block(*args)


def merge_results(parts: List[Dict[str, Accumulator]]) -> Dict[str, Accumulator]:
    """
    Merges per-worker accumulators in worker order.
    """
    merged: Dict[str, Accumulator] = {}
    for part in parts:
        for key, accumulator in part.items():
            if key in merged:
                merged[key] = combine(merged[key], accumulator)
            else:
                merged[key] = accumulator.copy()
    return merged


def run_parallel(
    task: TrialTask, trials: int, workers: int, seed: int
) -> Dict[str, Accumulator]:
    """
    Runs `trials` independent trials of `task` split into contiguous blocks,
    one block per worker. Worker w draws from RngStream(seed, w).

    :param task: Trial task.
    :param trials: Number of trials, at least 1.
    :param workers: Number of worker processes, at least 1. One worker runs
        inline in the calling process.
    :param seed: Non-negative 64-bit seed.
    :return: Accumulators keyed by observation name, merged in worker order.
    :raise TaskFailure: If any trial raises.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if workers < 1:
        raise ValueError(f"workers must be positive, got {workers}")

    jobs: List[Tuple[TrialTask, int, int, int, int]] = [
        (task, seed, worker_index, start, stop)
        for worker_index, (start, stop) in enumerate(partition_trials(trials, workers))
        if stop > start
    ]
    for _, _, worker_index, start, stop in jobs:
        logger.debug(f"Worker {worker_index} runs trials [{start}, {stop}).")

    parts: List[Dict[str, Accumulator]]
    if 1 == workers:
        parts = [_run_block_star(job) for job in jobs]
    else:
        with multiprocessing.Pool(processes=min(workers, len(jobs))) as pool:
            parts = pool.map(_run_block_star, jobs, chunksize=1)
    return merge_results(parts)


class MonteCarloEngine:
    """
    Owns the worker count and base seed of an experiment and runs trial tasks
    with them.
    """

    def __init__(self, workers: int, seed: int, logger: logging.Logger):
        if workers < 1:
            raise ValueError(f"workers must be positive, got {workers}")
        self._logger: logging.Logger = logger
        self.__workers: int = workers
        self.__seed: int = seed

    @property
    def workers(self) -> int:
        return self.__workers

    @property
    def seed(self) -> int:
        return self.__seed

    def run(self, task: TrialTask, trials: int, label: str = "task") -> Dict[str, Accumulator]:
        self._logger.info(
            f"Running {label}: {trials} trials on {self.__workers} worker(s), seed {self.__seed}."
        )
        start_time: float = time.perf_counter()
        try:
            results: Dict[str, Accumulator] = run_parallel(
                task, trials, self.__workers, self.__seed
            )
        except TaskFailure as e:
            self._logger.error(f"Monte Carlo task {label} failed: {e}")
            raise
        self._logger.info(f"Finished {label} in {time.perf_counter() - start_time:.3f} s.")
        return results
