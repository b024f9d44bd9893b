"""Fitness spec strings shared by the CLI and the benchmark harness.

Grammar:

- `onemax:<n>`
- `jump:<m>:<n>`
- `dicut:<edge list>[:undirected]`
- `dicut+matroid:<edge list>:<constraint>[:undirected]`, constraint `uniform:<k>`, `partition:<blockfile>` (bit positions)
  or `partition-ids:<blockfile>` (vertex ids as written in the edge list)
- `mi:<csv>:<k>[:literal]`
"""

from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from loguru import logger

from heavymut.core import SetFunction, split_spec
from heavymut.graph_io import read_graph
from heavymut.landscapes import Jump, OneMax
from heavymut.matroid import ConstrainedFitness, Matroid, make_matroid
from heavymut.mutual_info import MIVariant, load_mi_fitness
from heavymut.submodular import CutFunction

UNDIRECTED_FLAG = "undirected"
LITERAL_FLAG = "literal"


def _integer(spec: str, text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"Invalid fitness spec {spec!r}: {what} must be an integer, got {text!r}.") from None


def _pop_flag(args: List[str], flag: str) -> Tuple[List[str], bool]:
    if args and args[-1].lower() == flag:
        return args[:-1], True
    return args, False


def _load_cut(path: str, undirected: bool) -> CutFunction:
    graph = read_graph(path, undirected=undirected)
    name = f"dicut:{Path(path).name}" + (f":{UNDIRECTED_FLAG}" if undirected else "")
    return CutFunction(graph, name=name)


def load_fitness(spec: str, undirected: bool = False) -> SetFunction:
    """Builds the fitness function described by `spec`.

    Args:
        spec: Fitness spec string, see the module documentation.
        undirected: Read cut instances as undirected graphs even without the flag.

    Raises:
        ValueError: If the spec is malformed or its files are invalid.
        OSError: If a referenced file cannot be read.
    """
    name, args = split_spec(spec)

    if name == "onemax":
        if len(args) != 1:
            raise ValueError(f"Invalid fitness spec {spec!r}: expected onemax:<n>.")
        return OneMax(_integer(spec, args[0], "n"))

    if name == "jump":
        if len(args) != 2:
            raise ValueError(f"Invalid fitness spec {spec!r}: expected jump:<m>:<n>.")
        return Jump(_integer(spec, args[0], "m"), _integer(spec, args[1], "n"))

    if name == "dicut":
        args, flagged = _pop_flag(args, UNDIRECTED_FLAG)
        if len(args) != 1 or not args[0]:
            raise ValueError(f"Invalid fitness spec {spec!r}: expected dicut:<path>[:undirected].")
        return _load_cut(args[0], undirected or flagged)

    if name == "dicut+matroid":
        args, flagged = _pop_flag(args, UNDIRECTED_FLAG)
        if len(args) < 2:
            raise ValueError(
                f"Invalid fitness spec {spec!r}: expected dicut+matroid:<path>:<constraint>[:undirected]."
            )
        cut = _load_cut(args[0], undirected or flagged)
        return ConstrainedFitness(cut, load_constraint(":".join(args[1:]), cut.n, cut.graph.original_ids))

    if name == "mi":
        args, literal = _pop_flag(args, LITERAL_FLAG)
        if len(args) != 2:
            raise ValueError(f"Invalid fitness spec {spec!r}: expected mi:<csv>:<k>[:literal].")
        variant = MIVariant.LITERAL if literal else MIVariant.LOG_FORM
        return load_mi_fitness(args[0], _integer(spec, args[1], "k"), variant)

    raise ValueError(
        f"Unknown fitness {name!r} in {spec!r} (expected onemax, jump, dicut, dicut+matroid or mi)."
    )


def load_constraint(spec: str, n: int, ids: Optional[Sequence[int]] = None) -> Matroid:
    """Builds a matroid constraint on `n` elements, see `make_matroid`."""
    matroid = make_matroid(spec, n, ids)
    logger.debug("Constraint {} on {} elements", matroid, n)
    return matroid
