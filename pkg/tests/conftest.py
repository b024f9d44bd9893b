from pathlib import Path
from typing import Callable, Dict, List

import numpy as np
import pandas as pd
import pytest

from heavymut.bench.runner import RESULT_COLUMNS
from heavymut.core import make_rng
from heavymut.graph_io import DirectedGraph


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(12345)


@pytest.fixture
def triangle() -> DirectedGraph:
    # 0 -> 1 -> 2 -> 0
    return DirectedGraph.from_arcs([(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def write_file(tmp_path: Path) -> Callable[[str, str], Path]:
    def write(name: str, content: str) -> Path:
        path = tmp_path / name
        path.write_text(content, encoding="utf-8")
        return path

    return write


@pytest.fixture
def edge_list(write_file: Callable[[str, str], Path]) -> Path:
    # 1-based ids, 5 vertices, one comment and one blank line
    return write_file(
        "graph.txt",
        "# small test graph\n1 2\n1 3\n2 3\n3 4\n\n4 5\n5 1\n2 5\n",
    )


def results_frame(means: Dict[str, Dict[str, List[float]]], checkpoint: int = 10) -> pd.DataFrame:
    """Builds a result table with the given per-run fitness values of every (instance, operator)."""
    rows = []
    for instance, operators in means.items():
        for operator, values in operators.items():
            for run_id, value in enumerate(values):
                rows.append(
                    {
                        "instance": instance,
                        "operator": operator,
                        "run_id": run_id,
                        "seed": run_id,
                        "checkpoint": checkpoint,
                        "best_fitness": value,
                        "wall_ms": 1.0,
                    }
                )
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


@pytest.fixture
def operator_families() -> pd.DataFrame:
    # Best-ranked members: pmut:3.5 (1.667) and fmut:1.5 (2.667).
    return results_frame(
        {
            "g1": {"pmut:1.5": [100.0], "pmut:3.5": [98.0], "fmut:1.5": [95.0], "fmut:2.5": [97.0], "unif1": [80.0]},
            "g2": {"pmut:1.5": [50.0], "pmut:3.5": [52.0], "fmut:1.5": [51.0], "fmut:2.5": [49.0], "unif1": [40.0]},
            "g3": {"pmut:1.5": [10.0], "pmut:3.5": [10.0], "fmut:1.5": [10.0], "fmut:2.5": [9.0], "unif1": [5.0]},
        }
    )
