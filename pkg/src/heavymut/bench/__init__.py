"""Benchmark harness: experiment configs, trial execution and rank statistics."""

from heavymut.bench.config import ExperimentConfig, parse_config, read_config
from heavymut.bench.runner import RESULT_COLUMNS, run_experiment, run_trial
from heavymut.bench.stats import (
    RankTable,
    average_ranks,
    best_in_family,
    family_gap_summary,
    family_gaps,
    footprint,
    friedman_test,
    gap_summary,
    has_families,
    instance_gaps,
    nemenyi_cd,
    nemenyi_pairs,
    read_results,
    write_summaries,
)
