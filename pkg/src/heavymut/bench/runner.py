"""Execution of experiment configs into result tables."""

import functools
import time
from concurrent.futures import Executor, Future, ProcessPoolExecutor, wait
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel

from heavymut.bench.config import ExperimentConfig
from heavymut.core import SetFunction, derive_seed
from heavymut.ea import StopCondition, run_opo_ea
from heavymut.fitness import load_fitness
from heavymut.mutation import MutationOperator, make_operator

RESULT_COLUMNS = ["instance", "operator", "run_id", "seed", "checkpoint", "best_fitness", "wall_ms"]


class TrialResult(BaseModel):
    """Best fitness of one run at every checkpoint; `None` marks an incomplete trial."""

    run_id: int
    seed: int
    best: Optional[List[float]] = None
    wall_ms: float = 0.0


def run_trial(
    fitness: SetFunction,
    operator: MutationOperator,
    budget: int,
    checkpoints: Sequence[int],
    seed: int,
    run_id: int = 0,
    deadline: Optional[float] = None,
) -> TrialResult:
    """Runs the EA for `budget` evaluations and reads the best fitness at each checkpoint.

    A run still going at the absolute `time.time()` `deadline` is abandoned and
    reported as incomplete.
    """
    started = time.perf_counter()
    record = run_opo_ea(fitness, operator, StopCondition(max_evaluations=budget, deadline=deadline), seed)
    if record.timed_out:
        return TrialResult(run_id=run_id, seed=seed, wall_ms=(time.perf_counter() - started) * 1000.0)
    best = [record.best_at(checkpoint) for checkpoint in checkpoints]
    wall_ms = (time.perf_counter() - started) * 1000.0
    return TrialResult(run_id=run_id, seed=seed, best=best, wall_ms=wall_ms)


@functools.lru_cache(maxsize=8)
def _cached_fitness(spec: str, undirected: bool) -> SetFunction:
    return load_fitness(spec, undirected=undirected)


def _worker_trial(
    spec: str,
    undirected: bool,
    operator_spec: str,
    budget: int,
    checkpoints: Tuple[int, ...],
    seed: int,
    run_id: int,
    deadline: Optional[float],
) -> TrialResult:
    # Worker processes load every instance once and keep it for later trials.
    return run_trial(
        _cached_fitness(spec, undirected),
        make_operator(operator_spec),
        budget,
        checkpoints,
        seed,
        run_id,
        deadline,
    )


def _rows(instance: str, operator: str, checkpoints: Sequence[int], trial: TrialResult) -> List[Dict]:
    return [
        {
            "instance": instance,
            "operator": operator,
            "run_id": trial.run_id,
            "seed": trial.seed,
            "checkpoint": checkpoint,
            "best_fitness": np.nan if trial.best is None else trial.best[index],
            "wall_ms": round(trial.wall_ms, 3),
        }
        for index, checkpoint in enumerate(checkpoints)
    ]


def _run_pair_sequential(
    config: ExperimentConfig,
    fitness: SetFunction,
    operator: MutationOperator,
    seeds: List[int],
) -> List[TrialResult]:
    deadline = _deadline(config)
    return [
        run_trial(fitness, operator, config.budget, config.checkpoints, seed, run_id, deadline)
        for run_id, seed in enumerate(seeds)
    ]


def _run_pair_parallel(
    config: ExperimentConfig,
    executor: Executor,
    spec: str,
    operator: MutationOperator,
    seeds: List[int],
) -> List[TrialResult]:
    # The pool is idle here: every trial of the previous pair has returned or been cancelled.
    deadline = _deadline(config)
    futures: List[Future] = [
        executor.submit(
            _worker_trial,
            spec,
            config.undirected,
            str(operator),
            config.budget,
            tuple(config.checkpoints),
            seed,
            run_id,
            deadline,
        )
        for run_id, seed in enumerate(seeds)
    ]
    if deadline is not None:
        wait(futures, timeout=max(0.0, deadline - time.time()))
        for future in futures:
            future.cancel()
    # Running trials stop on their own at the deadline.
    wait(futures)

    return [
        TrialResult(run_id=run_id, seed=seed) if future.cancelled() else future.result()
        for run_id, (seed, future) in enumerate(zip(seeds, futures))
    ]


def _deadline(config: ExperimentConfig) -> Optional[float]:
    if config.max_wall_seconds is None:
        return None
    return time.time() + config.max_wall_seconds


def _write_rows(path: Path, frame: pd.DataFrame, header: bool) -> None:
    frame.to_csv(path, mode="w" if header else "a", header=header, index=False)


def run_experiment(config: ExperimentConfig) -> pd.DataFrame:
    """Runs every (instance, operator, run) trial of `config`.

    Trial seeds are derived from `(master_seed, instance index, operator index, run id)`,
    so results do not depend on the number of workers or the completion order. Rows
    are ordered by instance, operator, run and checkpoint, and appended to
    `config.output_path` after every (instance, operator) pair.

    Instances that fail to load are skipped with a warning. Each (instance, operator) pair gets
    `max_wall_seconds` from the moment its trials are submitted; trials still running or
    not yet started at that point are kept with an empty `best_fitness`.

    Returns:
        The result table with the columns of `RESULT_COLUMNS`.
    """
    operators = [make_operator(spec) for spec in config.operators]
    output = config.output_path
    if output is not None:
        output.parent.mkdir(parents=True, exist_ok=True)
        _write_rows(output, pd.DataFrame(columns=RESULT_COLUMNS), header=True)

    executor: Optional[Executor] = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    frames: List[pd.DataFrame] = []
    try:
        for instance_index, spec in enumerate(config.instances):
            try:
                fitness = load_fitness(spec, undirected=config.undirected)
                for operator in operators:
                    operator.validate_for(fitness.n)
            except (ValueError, OSError) as ex:
                logger.warning("Skipping instance {}: {}", spec, ex)
                continue

            for operator_index, operator in enumerate(operators):
                seeds = [
                    derive_seed(config.master_seed, instance_index, operator_index, run_id)
                    for run_id in range(config.repetitions)
                ]
                if executor is None:
                    trials = _run_pair_sequential(config, fitness, operator, seeds)
                else:
                    trials = _run_pair_parallel(config, executor, spec, operator, seeds)

                incomplete = sum(trial.best is None for trial in trials)
                if incomplete:
                    logger.warning(
                        "{} on {}: {} of {} trials exceeded the wall-clock cap",
                        operator,
                        spec,
                        incomplete,
                        len(trials),
                    )
                for trial in trials:
                    if trial.best is not None:
                        logger.info(
                            "{} on {} run {}: best {} ({:.0f} ms)",
                            operator,
                            spec,
                            trial.run_id,
                            trial.best[-1],
                            trial.wall_ms,
                        )

                frame = pd.DataFrame(
                    [row for trial in trials for row in _rows(spec, str(operator), config.checkpoints, trial)],
                    columns=RESULT_COLUMNS,
                )
                frame["seed"] = frame["seed"].astype(np.uint64)
                if output is not None:
                    _write_rows(output, frame, header=False)
                frames.append(frame)
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    if not frames:
        return pd.DataFrame(columns=RESULT_COLUMNS)
    return pd.concat(frames, ignore_index=True)
