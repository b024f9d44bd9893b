"""Rank statistics over result tables: average ranks, Friedman test, Nemenyi CD, gaps."""

import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel
from scipy import stats

from heavymut.bench.runner import RESULT_COLUMNS

# Critical values of the studentized range statistic divided by sqrt(2), by number of operators.
NEMENYI_Q: Dict[float, Dict[int, float]] = {
    0.05: {2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850, 7: 2.949, 8: 3.031, 9: 3.102, 10: 3.164},
    0.10: {2: 1.645, 3: 2.052, 4: 2.291, 5: 2.459, 6: 2.589, 7: 2.693, 8: 2.780, 9: 2.855, 10: 2.920},
}

FOOTPRINT_TOLERANCE = 0.01


class RankTable(BaseModel):
    """Average rank of every operator across instances (rank 1 is best)."""

    checkpoint: int
    average_ranks: Dict[str, float]
    instance_count: int
    operator_count: int
    per_instance: Dict[str, Dict[str, float]] = {}

    def best(self) -> str:
        return min(self.average_ranks, key=self.average_ranks.__getitem__)


class FriedmanResult(BaseModel):
    chi_square: float
    f_statistic: float
    p_value: float
    instance_count: int
    operator_count: int


def read_results(path: Union[str, Path]) -> pd.DataFrame:
    """Reads a result CSV written by the benchmark harness."""
    frame = pd.read_csv(path)
    missing = [column for column in RESULT_COLUMNS if column not in frame.columns]
    if missing:
        raise ValueError(f"{path} is not a result table, missing columns: {', '.join(missing)}.")
    return frame


def mean_table(results: pd.DataFrame, checkpoint: int) -> pd.DataFrame:
    """Mean best fitness per instance (rows) and operator (columns) at `checkpoint`.

    Rows and columns keep the order of first appearance. Instances with incomplete
    trials are dropped with a log line.

    Raises:
        ValueError: If the checkpoint is absent or an (instance, operator) cell has no rows.
    """
    at_checkpoint = results[results["checkpoint"] == checkpoint]
    if at_checkpoint.empty:
        available = ", ".join(str(value) for value in sorted(results["checkpoint"].unique()))
        raise ValueError(f"No results at checkpoint {checkpoint} (available: {available}).")

    instances = list(pd.unique(at_checkpoint["instance"]))
    operators = list(pd.unique(at_checkpoint["operator"]))
    counts = at_checkpoint.groupby(["instance", "operator"], sort=False).size().unstack("operator")
    counts = counts.reindex(index=instances, columns=operators)
    missing = [
        f"({instance}, {operator})"
        for instance in instances
        for operator in operators
        if pd.isna(counts.loc[instance, operator])
    ]
    if missing:
        raise ValueError(f"Missing result cells at checkpoint {checkpoint}: {', '.join(missing)}.")

    means = at_checkpoint.groupby(["instance", "operator"], sort=False)["best_fitness"].mean()
    means = means.unstack("operator").reindex(index=instances, columns=operators)
    unfinished = at_checkpoint.loc[at_checkpoint["best_fitness"].isna(), "instance"]
    incomplete = [str(instance) for instance in pd.unique(unfinished)]
    if incomplete:
        logger.info("Skipping instances with incomplete trials at {}: {}", checkpoint, ", ".join(incomplete))
        means = means.drop(index=incomplete)
    return means


def rank_matrix(means: pd.DataFrame) -> pd.DataFrame:
    """Ranks operators per instance by mean fitness, descending; ties share the mean rank."""
    return means.rank(axis=1, ascending=False, method="average")


def average_ranks(results: pd.DataFrame, checkpoint: int) -> RankTable:
    """Average rank of every operator at `checkpoint`, ranking by mean fitness per instance."""
    means = mean_table(results, checkpoint)
    if means.empty:
        raise ValueError(f"No complete instances at checkpoint {checkpoint}.")
    ranks = rank_matrix(means)
    return RankTable(
        checkpoint=checkpoint,
        average_ranks={operator: float(value) for operator, value in ranks.mean(axis=0).items()},
        instance_count=len(ranks),
        operator_count=ranks.shape[1],
        per_instance={
            str(instance): {operator: float(rank) for operator, rank in row.items()}
            for instance, row in ranks.iterrows()
        },
    )


def nemenyi_cd(k: int, N: int, alpha: float = 0.05) -> float:
    """Critical difference `q * sqrt(k (k + 1) / (6 N))` of the Nemenyi test.

    Raises:
        ValueError: For `k` outside `2..10`, `N < 2` or `alpha` not in `{0.05, 0.10}`.
    """
    table = next((values for level, values in NEMENYI_Q.items() if math.isclose(level, alpha)), None)
    if table is None:
        raise ValueError(f"Unsupported significance level {alpha} (supported: 0.05, 0.10).")
    if k not in table:
        raise ValueError(f"Nemenyi critical values cover 2 to 10 operators, got k={k}.")
    if N < 2:
        raise ValueError(f"The Nemenyi test needs at least 2 instances, got N={N}.")
    return table[k] * math.sqrt(k * (k + 1) / (6.0 * N))


def nemenyi_pairs(ranks: RankTable, cd: float) -> pd.DataFrame:
    """Pairwise average-rank differences, flagged significant when they exceed `cd`."""
    operators = list(ranks.average_ranks)
    rows = []
    for index, first in enumerate(operators):
        for second in operators[index + 1 :]:
            difference = abs(ranks.average_ranks[first] - ranks.average_ranks[second])
            rows.append(
                {"operator_a": first, "operator_b": second, "rank_difference": difference, "significant": difference > cd}
            )
    return pd.DataFrame(rows, columns=["operator_a", "operator_b", "rank_difference", "significant"])


def friedman_test(means: pd.DataFrame) -> FriedmanResult:
    """Friedman test on a mean table with the Iman-Davenport F correction."""
    N, k = means.shape
    if N < 2 or k < 2:
        raise ValueError(f"The Friedman test needs at least 2 instances and 2 operators, got {N} x {k}.")
    average = rank_matrix(means).mean(axis=0).to_numpy()
    chi_square = 12.0 * N / (k * (k + 1)) * (np.sum(average ** 2) - k * (k + 1) ** 2 / 4.0)
    denominator = N * (k - 1) - chi_square
    if denominator <= 0:
        f_statistic, p_value = math.inf, 0.0
    else:
        f_statistic = (N - 1) * chi_square / denominator
        p_value = float(stats.f.sf(f_statistic, k - 1, (k - 1) * (N - 1)))
    return FriedmanResult(
        chi_square=float(chi_square),
        f_statistic=float(f_statistic),
        p_value=p_value,
        instance_count=N,
        operator_count=k,
    )


def instance_gaps(results: pd.DataFrame, checkpoint: int) -> pd.Series:
    """Per-instance gap `100 * (best - worst) / |best|` between operator means, in percent."""
    means = mean_table(results, checkpoint)
    best, worst = means.max(axis=1), means.min(axis=1)
    gaps = 100.0 * (best - worst) / best.abs().where(best != 0)
    return gaps.fillna(0.0).rename(f"gap_percent_at_{checkpoint}")


def gap_summary(results: pd.DataFrame, checkpoint: int) -> Tuple[float, float, float]:
    """Minimum, mean and maximum gap over instances at `checkpoint`."""
    gaps = instance_gaps(results, checkpoint)
    if gaps.empty:
        raise ValueError(f"No complete instances at checkpoint {checkpoint}.")
    return float(gaps.min()), float(gaps.mean()), float(gaps.max())


def best_in_family(ranks: RankTable, family: str) -> str:
    """Best-ranked operator of a family such as `pmut` (any `pmut:<beta>` spec)."""
    members = [operator for operator in ranks.average_ranks if operator.split(":", 1)[0] == family]
    if not members:
        raise ValueError(f"No {family} operator in the results.")
    return min(members, key=ranks.average_ranks.__getitem__)


def family_gaps(
    results: pd.DataFrame, checkpoint: int, leader: str = "pmut", rival: str = "fmut"
) -> pd.Series:
    """Per-instance advantage of the best-ranked `leader` over the best-ranked `rival`, in percent.

    The gap is `100 * (leader - rival) / |max(leader, rival)|` on the mean fitness of the
    two operators picked by average rank; it is negative where `rival` is ahead.
    """
    ranks = average_ranks(results, checkpoint)
    first, second = best_in_family(ranks, leader), best_in_family(ranks, rival)
    means = mean_table(results, checkpoint)
    larger = means[[first, second]].max(axis=1)
    gaps = 100.0 * (means[first] - means[second]) / larger.abs().where(larger != 0)
    return gaps.fillna(0.0).rename(f"{first}_vs_{second}_percent_at_{checkpoint}")


def family_gap_summary(
    results: pd.DataFrame, checkpoint: int, leader: str = "pmut", rival: str = "fmut"
) -> Tuple[float, float, float]:
    """Minimum, mean and maximum of `family_gaps` over instances."""
    gaps = family_gaps(results, checkpoint, leader, rival)
    return float(gaps.min()), float(gaps.mean()), float(gaps.max())


def has_families(results: pd.DataFrame, *families: str) -> bool:
    present = {str(operator).split(":", 1)[0] for operator in pd.unique(results["operator"])}
    return all(family in present for family in families)


def footprint(results: pd.DataFrame, checkpoint: int, tolerance: float = FOOTPRINT_TOLERANCE) -> pd.DataFrame:
    """Flags, per instance and operator, whether the mean is within `tolerance` of the best mean.

    The extra column `operators_within` counts the flagged operators of every instance.
    """
    means = mean_table(results, checkpoint)
    best = means.max(axis=1)
    within = means.ge(best - tolerance * best.abs(), axis=0)
    within["operators_within"] = within.sum(axis=1)
    within.index.name = "instance"
    return within


def write_summaries(
    results: pd.DataFrame, checkpoints: Sequence[int], out_dir: Union[str, Path]
) -> List[Path]:
    """Writes `ranks.csv`, `gaps.csv` and one `footprint_at_<checkpoint>.csv` per checkpoint.

    `gaps.csv` also carries the pmut-versus-fmut gaps when both families were run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    ranks = pd.DataFrame(
        {f"avg_rank_at_{checkpoint}": pd.Series(average_ranks(results, checkpoint).average_ranks)
         for checkpoint in checkpoints}
    )
    ranks.index.name = "operator"
    columns = [instance_gaps(results, checkpoint) for checkpoint in checkpoints]
    if has_families(results, "pmut", "fmut"):
        columns += [family_gaps(results, checkpoint) for checkpoint in checkpoints]
    gaps = pd.concat(columns, axis=1)
    gaps.index.name = "instance"

    written = [out_dir / "ranks.csv", out_dir / "gaps.csv"]
    ranks.to_csv(written[0])
    gaps.to_csv(written[1])
    for checkpoint in checkpoints:
        path = out_dir / f"footprint_at_{checkpoint}.csv"
        footprint(results, checkpoint).to_csv(path)
        written.append(path)
    logger.debug("Wrote summaries: {}", ", ".join(str(path) for path in written))
    return written
