"""Command line interface."""

import sys
from enum import Enum
from pathlib import Path
from typing import Iterator, NoReturn, Optional

import pandas as pd
import typer
from loguru import logger

from heavymut.bench import (
    average_ranks,
    best_in_family,
    family_gap_summary,
    friedman_test,
    gap_summary,
    has_families,
    nemenyi_cd,
    nemenyi_pairs,
    read_config,
    read_results,
    run_experiment,
    write_summaries,
)
from heavymut.bench.stats import mean_table
from heavymut.core import to_string
from heavymut.ea import RunRecord, StopCondition, run_opo_ea
from heavymut.fitness import load_constraint, load_fitness
from heavymut.matroid import ConstrainedFitness
from heavymut.mutation import expected_flip_distribution, flip_count_histogram, make_operator
from heavymut.submodular import CutFunction, brute_force_max

cli = typer.Typer(help="Heavy-tailed mutation for the (1+1) EA on submodular and benchmark functions.")


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def _fail(ex: Exception) -> NoReturn:
    message = " ".join(str(ex).split())
    typer.secho(f"error: {message}", fg=typer.colors.RED, err=True)
    raise typer.Exit(code=1)


def _record_csv(record: RunRecord) -> str:
    frame = pd.DataFrame(record.improvements, columns=["evaluation", "fitness"])
    return frame.to_csv(index=False)


@cli.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug output.")) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "INFO")


@cli.command()
def run(
    fitness: str = typer.Option(..., "--fitness", "-f", help="Fitness spec, e.g. onemax:20 or dicut:graph.txt."),
    operator: str = typer.Option(..., "--operator", "-o", help="Operator spec, e.g. pmut:1.5."),
    budget: int = typer.Option(..., "--budget", "-b", help="Maximum number of fitness evaluations."),
    seed: int = typer.Option(0, "--seed", "-s"),
    target: Optional[float] = typer.Option(None, "--target", help="Stop once this fitness is reached."),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the run to this file instead of stdout."),
    format: OutputFormat = typer.Option(OutputFormat.CSV, "--format"),
) -> None:
    """Run the (1+1) EA once and print its trajectory."""
    try:
        function = load_fitness(fitness)
        record = run_opo_ea(
            function,
            make_operator(operator),
            StopCondition(max_evaluations=budget, target_fitness=target),
            seed,
        )
    except (ValueError, OSError) as ex:
        _fail(ex)

    text = record.model_dump_json(indent=4) if format == OutputFormat.JSON else _record_csv(record)
    if out is None:
        typer.echo(text, nl=format == OutputFormat.JSON)
        return
    try:
        out.write_text(text, encoding="utf-8")
    except OSError as ex:
        _fail(ex)
    typer.echo(f"final fitness {record.final_fitness:g} after {record.evaluations_used} evaluations")


@cli.command()
def bench(
    config: Path = typer.Option(..., "--config", "-c", help="Experiment file with key = value lines."),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Override the number of worker processes."),
    summaries: Optional[Path] = typer.Option(None, "--summaries", help="Directory for rank, gap and footprint CSVs."),
) -> None:
    """Run a batch experiment."""
    try:
        experiment = read_config(config)
        if workers is not None:
            experiment = experiment.model_copy(update={"workers": workers})
        results = run_experiment(experiment)
        if summaries is not None and not results.empty:
            write_summaries(results, experiment.checkpoints, summaries)
    except (ValueError, OSError) as ex:
        _fail(ex)

    if experiment.output_path is None:
        typer.echo(results.to_csv(index=False), nl=False)
    else:
        typer.echo(f"{len(results)} rows written to {experiment.output_path}")


def _rank_lines(results: pd.DataFrame, checkpoint: int, alpha: float) -> Iterator[str]:
    ranks = average_ranks(results, checkpoint)
    yield "operator,avg_rank"
    for operator, rank in sorted(ranks.average_ranks.items(), key=lambda item: item[1]):
        yield f"{operator},{rank:.4f}"

    minimum, mean, maximum = gap_summary(results, checkpoint)
    yield f"gap_percent min={minimum:.4f} mean={mean:.4f} max={maximum:.4f}"
    if has_families(results, "pmut", "fmut"):
        label = f"{best_in_family(ranks, 'pmut')} vs {best_in_family(ranks, 'fmut')}"
        minimum, mean, maximum = family_gap_summary(results, checkpoint)
        yield f"{label} gap_percent min={minimum:.4f} mean={mean:.4f} max={maximum:.4f}"

    if ranks.instance_count < 2 or not 2 <= ranks.operator_count <= 10:
        yield f"critical_distance n/a (k={ranks.operator_count}, N={ranks.instance_count})"
        return
    cd = nemenyi_cd(ranks.operator_count, ranks.instance_count, alpha)
    yield f"critical_distance {cd:.4f} (k={ranks.operator_count}, N={ranks.instance_count}, alpha={alpha:g})"

    friedman = friedman_test(mean_table(results, checkpoint))
    yield f"friedman chi2={friedman.chi_square:.4f} F={friedman.f_statistic:.4f} p={friedman.p_value:.4g}"

    pairs = nemenyi_pairs(ranks, cd)
    for pair in pairs[pairs["significant"]].itertuples():
        yield f"significant {pair.operator_a} vs {pair.operator_b}: {pair.rank_difference:.4f}"


@cli.command()
def rank(
    results: Path = typer.Option(..., "--results", "-r", help="Result CSV of a bench run."),
    checkpoint: int = typer.Option(..., "--checkpoint", "-k"),
    alpha: float = typer.Option(0.05, "--alpha", help="Significance level, 0.05 or 0.10."),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir", help="Also write summary CSVs here."),
) -> None:
    """Print average ranks, gap summary and Nemenyi critical distance."""
    try:
        table = read_results(results)
        lines = list(_rank_lines(table, checkpoint, alpha))
        if out_dir is not None:
            write_summaries(table, [checkpoint], out_dir)
    except (ValueError, OSError) as ex:
        _fail(ex)
    typer.echo("\n".join(lines))


@cli.command()
def oracle(
    fitness: str = typer.Option(..., "--fitness", "-f"),
    constraint: Optional[str] = typer.Option(
        None, "--constraint", help="uniform:<k>, partition:<blockfile> or partition-ids:<blockfile>."
    ),
) -> None:
    """Compute the optimum by exhaustive search (n <= 24)."""
    try:
        function = load_fitness(fitness)
        matroid = None
        if isinstance(function, ConstrainedFitness):
            function, matroid = function.f, function.matroid
        if constraint is not None:
            ids = function.graph.original_ids if isinstance(function, CutFunction) else None
            matroid = load_constraint(constraint, function.n, ids)
        solution, value = brute_force_max(function, matroid)
    except (ValueError, OSError) as ex:
        _fail(ex)
    typer.echo(f"OPT {value:g}")
    typer.echo(f"solution {to_string(solution)}")


@cli.command()
def sample(
    operator: str = typer.Option(..., "--operator", "-o"),
    n: int = typer.Option(..., "--n", help="Bit string length."),
    draws: int = typer.Option(100000, "--draws", "-d"),
    seed: int = typer.Option(0, "--seed", "-s"),
    exact: bool = typer.Option(False, "--exact", help="Add the exact expected frequency."),
) -> None:
    """Print the flip-count histogram of an operator as CSV."""
    try:
        if draws < 1:
            raise ValueError(f"draws must be positive, got {draws}.")
        mutation = make_operator(operator)
        histogram = flip_count_histogram(mutation, n, draws, seed)
        frame = pd.DataFrame({"flips": range(n + 1), "count": histogram, "frequency": histogram / draws})
        if exact:
            frame["expected"] = expected_flip_distribution(mutation, n)
    except (ValueError, OSError) as ex:
        _fail(ex)
    typer.echo(frame.to_csv(index=False), nl=False)
