import logging
from typing import Dict, Mapping

import numpy as np
import pytest

from intransitive_dice_lab.errors import TaskFailure
from intransitive_dice_lab.mc_engine.accumulator import Accumulator
from intransitive_dice_lab.mc_engine.engine import (
    MonteCarloEngine,
    RngStream,
    derive_seed,
    partition_trials,
    run_parallel,
)

logger: logging.Logger = logging.getLogger(__name__)


class UniformTask:
    def __call__(self, rng: np.random.Generator, trial_index: int) -> Mapping[str, float]:
        return {"u": rng.uniform(), "index": float(trial_index)}


class CoinTask:
    def __call__(self, rng: np.random.Generator, trial_index: int) -> Mapping[str, float]:
        return {"heads": float(rng.uniform() < 0.5)}


class FailingTask:
    def __call__(self, rng: np.random.Generator, trial_index: int) -> Mapping[str, float]:
        if 5 == trial_index:
            raise ZeroDivisionError("boom")
        return {"u": 0.0}


def test_partition_trials() -> None:
    assert [(0, 4), (4, 7), (7, 10)] == partition_trials(10, 3)
    assert [(0, 1), (1, 2), (2, 2)] == partition_trials(2, 3)


def test_rng_stream_is_reproducible() -> None:
    first: np.ndarray = RngStream(42, 3).generator().uniform(size=5)
    second: np.ndarray = RngStream(42, 3).generator().uniform(size=5)
    other: np.ndarray = RngStream(42, 4).generator().uniform(size=5)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)
    with pytest.raises(ValueError):
        RngStream(-1, 0).generator()


def test_derive_seed() -> None:
    assert derive_seed(7, 1) == derive_seed(7, 1)
    assert derive_seed(7, 1) != derive_seed(7, 2)
    assert 0 <= derive_seed(7, 1) < 2**64


def test_single_worker_runs_every_trial() -> None:
    results: Dict[str, Accumulator] = run_parallel(UniformTask(), 100, 1, 0)
    assert 100 == results["u"].count
    assert pytest.approx(49.5) == results["index"].mean
    assert abs(results["u"].mean - 0.5) < 4 * results["u"].sem()


def test_determinism_per_seed_and_workers() -> None:
    first: Dict[str, Accumulator] = run_parallel(UniformTask(), 50, 2, 9)
    second: Dict[str, Accumulator] = run_parallel(UniformTask(), 50, 2, 9)
    assert first["u"].__dict__ == second["u"].__dict__
    assert 50 == first["u"].count


def test_more_workers_than_trials() -> None:
    results: Dict[str, Accumulator] = run_parallel(UniformTask(), 2, 3, 1)
    assert 2 == results["u"].count


def test_task_failure_names_worker() -> None:
    with pytest.raises(TaskFailure) as exc_info:
        run_parallel(FailingTask(), 10, 2, 0)
    assert 1 == exc_info.value.worker_index
    assert "ZeroDivisionError" in str(exc_info.value)


def test_invalid_arguments() -> None:
    with pytest.raises(ValueError):
        run_parallel(UniformTask(), 0, 1, 0)
    with pytest.raises(ValueError):
        run_parallel(UniformTask(), 10, 0, 0)
    with pytest.raises(ValueError):
        MonteCarloEngine(0, 0, logger)


def test_engine_run() -> None:
    engine: MonteCarloEngine = MonteCarloEngine(1, 123, logger)
    assert 1 == engine.workers and 123 == engine.seed
    results: Dict[str, Accumulator] = engine.run(UniformTask(), 20, "uniform")
    assert 20 == results["u"].count


def test_counts_are_fixed_per_worker_count() -> None:
    # Each worker draws from its own stream, so only the trial total is shared
    # across worker counts; the counts themselves are fixed per (seed, workers).
    totals: Dict[int, Accumulator] = {}
    for workers in (1, 8):
        first: Dict[str, Accumulator] = run_parallel(CoinTask(), 400, workers, 77)
        second: Dict[str, Accumulator] = run_parallel(CoinTask(), 400, workers, 77)
        assert first["heads"].__dict__ == second["heads"].__dict__
        totals[workers] = first["heads"]
    assert 400 == totals[1].count == totals[8].count
    single: np.ndarray = RngStream(77, 0).generator().uniform(size=400)
    assert float((single < 0.5).sum()) == totals[1].total
