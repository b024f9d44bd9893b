from pathlib import Path
from typing import Callable

import pytest

from heavymut.core import as_bits, complement, make_rng, random_bits
from heavymut.fitness import load_constraint, load_fitness
from heavymut.landscapes import Jump, OneMax
from heavymut.matroid import ConstrainedFitness, PartitionMatroid, UniformMatroid
from heavymut.mutual_info import MIVariant, MutualInfoFitness
from heavymut.submodular import CutFunction


def test_closed_form_landscapes() -> None:
    onemax = load_fitness("onemax:12")
    assert isinstance(onemax, OneMax)
    assert onemax.n == 12
    jump = load_fitness("JUMP:3:20")
    assert isinstance(jump, Jump)
    assert jump.name == "jump:3:20"


def test_directed_cut(edge_list: Path) -> None:
    cut = load_fitness(f"dicut:{edge_list}")
    assert isinstance(cut, CutFunction)
    assert cut.n == 5
    assert cut.graph.m == 7
    assert cut.name == "dicut:graph.txt"


def test_undirected_cut(edge_list: Path) -> None:
    flagged = load_fitness(f"dicut:{edge_list}:undirected")
    assert flagged.graph.m == 14
    assert flagged.name == "dicut:graph.txt:undirected"
    assert load_fitness(f"dicut:{edge_list}", undirected=True).graph.m == 14
    rng = make_rng(1)
    for _ in range(10):
        U = random_bits(5, rng)
        assert flagged.value(U) == flagged.value(complement(U))


def test_constrained_cut(edge_list: Path, write_file: Callable[[str, str], Path]) -> None:
    uniform = load_fitness(f"dicut+matroid:{edge_list}:uniform:2")
    assert isinstance(uniform, ConstrainedFitness)
    assert isinstance(uniform.matroid, UniformMatroid)
    assert uniform.value(as_bits("11100")) == -1
    assert uniform.value(as_bits("10000")) == 2
    assert uniform.name == "dicut:graph.txt+matroid"

    blocks = write_file("blocks.txt", "low 1 0 1 2\nhigh 1 3 4\n")
    partition = load_fitness(f"dicut+matroid:{edge_list}:partition:{blocks}:undirected")
    assert isinstance(partition.matroid, PartitionMatroid)
    assert partition.f.graph.m == 14


def test_mutual_information(write_file: Callable[[str, str], Path]) -> None:
    panel = write_file("panel.csv", "a,b,c\n1,2,0\n2,4,1\n4,3,1\n7,5,2\n5,5,4\n")
    log_form = load_fitness(f"mi:{panel}:2")
    assert isinstance(log_form, MutualInfoFitness)
    assert log_form.variant is MIVariant.LOG_FORM
    assert load_fitness(f"mi:{panel}:2:literal").variant is MIVariant.LITERAL


@pytest.mark.parametrize(
    "spec",
    ["", "onemax", "onemax:x", "onemax:3:4", "jump:3", "jump:1:10", "dicut", "dicut+matroid:g.txt", "mi:p.csv", "max3sat:5"],
)
def test_malformed_specs(spec: str) -> None:
    with pytest.raises(ValueError):
        load_fitness(spec)


def test_missing_files_are_reported(tmp_path: Path) -> None:
    with pytest.raises(OSError):
        load_fitness(f"dicut:{tmp_path / 'missing.txt'}")


def test_load_constraint() -> None:
    matroid = load_constraint("uniform:4", 10)
    assert isinstance(matroid, UniformMatroid)
    assert matroid.n == 10
    with pytest.raises(ValueError):
        load_constraint("uniform:-1", 10)


def test_constraints_can_use_original_vertex_ids(write_file: Callable[[str, str], Path]) -> None:
    # The size line declares five vertices but only 1, 2 and 3 carry arcs.
    graph = write_file("sparse.mtx", "5 5 2\n1 2\n2 3\n")
    blocks = write_file("ids.txt", "ends 1 1 3\nmiddle 1 2\n")
    fitness = load_fitness(f"dicut+matroid:{graph}:partition-ids:{blocks}")
    assert fitness.n == 3
    assert fitness.matroid.block_of.tolist() == [0, 1, 0]
    assert fitness.value(as_bits("101")) == -1
    assert fitness.value(as_bits("100")) == 1

    with pytest.raises(ValueError):
        bad = write_file("bad.txt", "all 1 1 2 5\n")
        load_fitness(f"dicut+matroid:{graph}:partition-ids:{bad}")
