"""The elitist (1+1) evolutionary algorithm."""

import math
import time
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, PositiveInt, model_validator

from heavymut.core import (
    REAL_TOLERANCE,
    BitsLike,
    FitnessMismatchError,
    SetFunction,
    as_bits,
    flip,
    make_rng,
    random_bits,
    to_string,
)
from heavymut.mutation import MutationOperator

DEADLINE_CHECK_INTERVAL = 1024


class StopCondition(BaseModel):
    """Evaluation budget and/or target fitness; a run stops at whichever comes first.

    `deadline` is an absolute `time.time()` after which the run is abandoned. It is
    checked every `DEADLINE_CHECK_INTERVAL` evaluations.
    """

    model_config = ConfigDict(frozen=True)

    max_evaluations: Optional[PositiveInt] = None
    target_fitness: Optional[float] = None
    deadline: Optional[float] = None

    @model_validator(mode="after")
    def _check_bound(self) -> "StopCondition":
        if self.max_evaluations is None and self.target_fitness is None:
            raise ValueError("A stop condition needs max_evaluations or target_fitness.")
        return self


class RunRecord(BaseModel):
    """Trajectory and outcome of a single run.

    `improvements` holds the initial evaluation followed by every strict improvement,
    as `(evaluation index, fitness)` pairs.
    """

    model_config = ConfigDict(frozen=True)

    improvements: List[Tuple[int, float]]
    final_solution: str
    final_fitness: float
    evaluations_used: int
    seed: int
    operator: str = ""
    fitness: str = ""
    target_evaluation: Optional[int] = None
    """Evaluation index at which the target fitness was first reached."""
    timed_out: bool = False
    """The run hit the stop deadline before its budget or target."""

    @model_validator(mode="after")
    def _check_trajectory(self) -> "RunRecord":
        if not self.improvements or self.improvements[0][0] != 1:
            raise ValueError("The trajectory must start with the initial evaluation (index 1).")
        for (index, value), (next_index, next_value) in zip(self.improvements, self.improvements[1:]):
            if not (next_index > index and next_value > value):
                raise ValueError("Trajectory entries must strictly increase in index and fitness.")
        if self.improvements[-1][1] != self.final_fitness:
            raise ValueError("final_fitness must equal the last recorded fitness.")
        if self.improvements[-1][0] > self.evaluations_used:
            raise ValueError("The trajectory records more evaluations than were used.")
        return self

    @property
    def hit_target(self) -> bool:
        return self.target_evaluation is not None

    def evaluations_to_target(self) -> Optional[int]:
        return self.target_evaluation

    def best_at(self, evaluations: int) -> float:
        """Best fitness found within the first `evaluations` evaluations."""
        if evaluations < 1:
            raise ValueError(f"Checkpoints start at evaluation 1, got {evaluations}.")
        best = self.improvements[0][1]
        for index, value in self.improvements:
            if index > evaluations:
                break
            best = value
        return best

    def solution(self) -> np.ndarray:
        return as_bits(self.final_solution)


def _reached(value: float, target: Optional[float], tolerance: float) -> bool:
    return target is not None and value >= target - tolerance


def run_opo_ea(
    fitness: SetFunction,
    operator: MutationOperator,
    stop: StopCondition,
    seed: int,
    init: Optional[BitsLike] = None,
    check_delta: bool = False,
) -> RunRecord:
    """Runs the (1+1) EA on `fitness` with mutation `operator`.

    Starts from `init` or a uniformly random bit string. Each iteration mutates the
    current solution once and accepts the offspring iff its fitness is not worse, so
    equal-fitness offspring replace the parent. Every iteration costs one evaluation,
    plus one for the initial solution.

    Args:
        fitness: Fitness function; its incremental `flipped_value` is used for offspring.
        operator: Mutation operator.
        stop: Evaluation budget and/or target fitness.
        seed: 64-bit seed of the run's random source.
        init: Optional initial solution.
        check_delta: Verify every incremental evaluation against a full one.

    Raises:
        ValueError: If `init` or the operator does not fit the fitness' ground set.
        FitnessMismatchError: If `check_delta` is set and an incremental value diverges.
    """
    n = fitness.n
    operator.validate_for(n)
    rng = make_rng(seed)

    if init is None:
        x = random_bits(n, rng)
    else:
        x = np.array(as_bits(init), dtype=bool)
        if x.shape != (n,):
            raise ValueError(f"Initial solution has length {len(x)}, fitness {fitness.name} needs {n}.")

    tolerance = 0.0 if fitness.integral else REAL_TOLERANCE
    target = stop.target_fitness
    budget = stop.max_evaluations if stop.max_evaluations is not None else math.inf

    current = float(fitness.value(x))
    evaluations = 1
    improvements: List[Tuple[int, float]] = [(1, current)]
    target_evaluation = 1 if _reached(current, target, tolerance) else None

    deadline = stop.deadline
    timed_out = False

    while target_evaluation is None and evaluations < budget:
        if deadline is not None and evaluations % DEADLINE_CHECK_INTERVAL == 1 and time.time() >= deadline:
            timed_out = True
            break
        flips = operator.sample_flips(n, rng)
        candidate = float(fitness.flipped_value(x, current, flips))
        evaluations += 1

        if check_delta:
            full = float(fitness.value(flip(x, flips)))
            if not math.isclose(candidate, full, rel_tol=0.0, abs_tol=max(tolerance, REAL_TOLERANCE)):
                raise FitnessMismatchError(
                    f"{fitness.name}: incremental value {candidate} != full value {full} "
                    f"at evaluation {evaluations}."
                )

        if candidate >= current:
            x[flips] ^= True
            if candidate > current:
                improvements.append((evaluations, candidate))
                if _reached(candidate, target, tolerance):
                    target_evaluation = evaluations
            current = candidate

    logger.debug(
        "{} with {} (seed {}): fitness {} after {} evaluations, {} improvements",
        fitness.name,
        operator,
        seed,
        current,
        evaluations,
        len(improvements) - 1,
    )
    return RunRecord(
        improvements=improvements,
        final_solution=to_string(x),
        final_fitness=current,
        evaluations_used=evaluations,
        seed=seed,
        operator=str(operator),
        fitness=fitness.name,
        target_evaluation=target_evaluation,
        timed_out=timed_out,
    )
