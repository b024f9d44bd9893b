from pathlib import Path
from typing import Callable

import pytest
from pydantic import ValidationError

from heavymut.bench.config import ExperimentConfig, parse_config, read_config
from heavymut.mutation import DEFAULT_OPERATORS, make_operator

EXPERIMENT = """
# two graphs
instance = dicut:a.txt
instance = dicut:b.txt
operator = pmut:1.5
operator = unif   # default rate
repetitions = 3
budget = 1000
checkpoints = 10, 100, 1000
master_seed = 42
output = out/results.csv
workers = 2
max_wall_seconds = 2.5
undirected = true
"""


def test_parse_config() -> None:
    config = parse_config(EXPERIMENT)
    assert config.instances == ["dicut:a.txt", "dicut:b.txt"]
    assert config.operators == ["pmut:1.5", "unif:1"]
    assert config.repetitions == 3
    assert config.checkpoints == [10, 100, 1000]
    assert config.master_seed == 42
    assert config.output_path == Path("out/results.csv")
    assert config.workers == 2
    assert config.max_wall_seconds == 2.5
    assert config.undirected
    assert config.trial_count == 12


def test_defaults() -> None:
    config = parse_config("instance = onemax:10\nbudget = 500\n")
    assert config.operators == [str(make_operator(spec)) for spec in DEFAULT_OPERATORS]
    assert config.repetitions == 100
    assert config.checkpoints == [500]
    assert config.master_seed == 0
    assert config.output_path is None
    assert config.workers == 1
    assert config.max_wall_seconds is None
    assert not config.undirected


def test_read_config_resolves_the_output_path(write_file: Callable[[str, str], Path], tmp_path: Path) -> None:
    config = read_config(write_file("experiment.txt", "instance = onemax:10\nbudget = 50\noutput = results.csv\n"))
    assert config.output_path == tmp_path / "results.csv"
    absolute = tmp_path / "elsewhere" / "r.csv"
    config = read_config(write_file("absolute.txt", f"instance = onemax:10\nbudget = 50\noutput = {absolute}\n"))
    assert config.output_path == absolute


@pytest.mark.parametrize(
    "text, line",
    [
        ("instance = onemax:10\nbudget 50\n", "line 2"),
        ("instance = onemax:10\nbudget = 50\nbudget = 60\n", "line 3"),
        ("colour = blue\n", "line 1"),
        ("instance =\n", "line 1"),
    ],
)
def test_malformed_lines_name_the_line(text: str, line: str) -> None:
    with pytest.raises(ValueError, match=line):
        parse_config(text)


@pytest.mark.parametrize(
    "text",
    [
        "budget = 50\n",
        "instance = onemax:10\n",
        "instance = onemax:10\nbudget = 0\n",
        "instance = onemax:10\nbudget = 50\noperator = pmut:0.5\n",
        "instance = onemax:10\nbudget = 50\ncheckpoints = 20, 10\n",
        "instance = onemax:10\nbudget = 50\ncheckpoints = 10, 10\n",
        "instance = onemax:10\nbudget = 50\ncheckpoints = 10, 60\n",
        "instance = onemax:10\nbudget = 50\ncheckpoints = 0, 10\n",
        "instance = onemax:10\nbudget = 50\nmaster_seed = -1\n",
        "instance = onemax:10\nbudget = 50\nworkers = 0\n",
        "instance = onemax:10\nbudget = 50\nmax_wall_seconds = 0\n",
    ],
)
def test_invalid_experiments(text: str) -> None:
    with pytest.raises(ValidationError):
        parse_config(text)


def test_config_is_frozen() -> None:
    config = ExperimentConfig(instances=["onemax:10"], budget=50)
    with pytest.raises(ValidationError):
        config.budget = 60  # type: ignore
    assert config.checkpoints == [50]
