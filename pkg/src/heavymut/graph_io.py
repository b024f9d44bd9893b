"""Edge-list ingestion into a compressed sparse row digraph."""

import re
from pathlib import Path
from typing import IO, Iterable, List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel

_SEPARATOR = re.compile(r"[,\s]+")


class GraphFormatError(ValueError):
    """Raised for malformed edge-list input."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseOptions(BaseModel):
    undirected: bool = False
    """Turn every edge into two opposite arcs (symmetric cut function)."""

    deduplicate: bool = False
    """Collapse parallel arcs; by default they are kept and add cut weight."""


def _csr(keys: np.ndarray, values: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable")
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=offsets[1:])
    return offsets, values[order]


def _gather(offsets: np.ndarray, values: np.ndarray, owners: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Returns `(owner, neighbor)` pairs for all CSR rows listed in `owners`."""
    starts = offsets[owners]
    counts = offsets[owners + 1] - starts
    total = int(counts.sum())
    if total == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    row_starts = np.cumsum(counts) - counts
    positions = np.arange(total) - np.repeat(row_starts - starts, counts)
    return np.repeat(owners, counts), values[positions]


class DirectedGraph:
    """Immutable digraph with out- and in-adjacency in compressed sparse row layout.

    Vertices are dense indices `0..n-1`; `original_ids[v]` is the id the vertex had
    in the input.
    """

    def __init__(
        self,
        n: int,
        sources: np.ndarray,
        targets: np.ndarray,
        original_ids: Optional[np.ndarray] = None,
        self_loops_dropped: int = 0,
        deduplicated: bool = False,
    ) -> None:
        sources = np.asarray(sources, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
        if sources.shape != targets.shape:
            raise ValueError("Arc source and target arrays must have equal length.")
        if sources.size and (min(sources.min(), targets.min()) < 0 or max(sources.max(), targets.max()) >= n):
            raise ValueError(f"Arc endpoints must lie in [0, {n}).")
        if np.any(sources == targets):
            raise ValueError("Self-loops are not allowed.")

        self.n = n
        self.m = int(sources.size)
        self.out_offsets, self.out_targets = _csr(sources, targets, n)
        self.in_offsets, self.in_sources = _csr(targets, sources, n)
        self.original_ids = (
            np.arange(n, dtype=np.int64) if original_ids is None else np.asarray(original_ids, dtype=np.int64)
        )
        self.self_loops_dropped = self_loops_dropped
        self.deduplicated = deduplicated

        # Arc list in out-adjacency order, for vectorized cut evaluation.
        self.arc_sources = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.out_offsets))
        self.arc_targets = self.out_targets
        for array in (
            self.out_offsets,
            self.out_targets,
            self.in_offsets,
            self.in_sources,
            self.original_ids,
            self.arc_sources,
        ):
            array.setflags(write=False)

    @classmethod
    def from_arcs(
        cls,
        arcs: Iterable[Tuple[int, int]],
        n: Optional[int] = None,
        undirected: bool = False,
        deduplicate: bool = False,
    ) -> "DirectedGraph":
        """Builds a graph on dense vertex ids from `(source, target)` pairs.

        Self-loops are dropped, like in the parser.
        """
        pairs = np.array(list(arcs), dtype=np.int64).reshape(-1, 2)
        if n is None:
            n = int(pairs.max()) + 1 if pairs.size else 0
        return cls._build(pairs[:, 0], pairs[:, 1], n, None, undirected, deduplicate)

    @classmethod
    def _build(
        cls,
        sources: np.ndarray,
        targets: np.ndarray,
        n: int,
        original_ids: Optional[np.ndarray],
        undirected: bool,
        deduplicate: bool,
    ) -> "DirectedGraph":
        loops = sources == targets
        dropped = int(loops.sum())
        sources, targets = sources[~loops], targets[~loops]
        if undirected:
            sources, targets = np.concatenate((sources, targets)), np.concatenate((targets, sources))
        if deduplicate and sources.size:
            unique = np.unique(np.stack((sources, targets), axis=1), axis=0)
            sources, targets = unique[:, 0], unique[:, 1]
        return cls(n, sources, targets, original_ids, dropped, deduplicate)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_offsets)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_offsets)

    def out_neighbors(self, vertex: int) -> np.ndarray:
        return self.out_targets[self.out_offsets[vertex] : self.out_offsets[vertex + 1]]

    def in_neighbors(self, vertex: int) -> np.ndarray:
        return self.in_sources[self.in_offsets[vertex] : self.in_offsets[vertex + 1]]

    def out_arcs_of(self, vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Returns `(sources, targets)` of every arc leaving one of `vertices`."""
        return _gather(self.out_offsets, self.out_targets, np.asarray(vertices, dtype=np.int64))

    def in_arcs_of(self, vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Returns `(sources, targets)` of every arc entering one of `vertices`."""
        targets, sources = _gather(self.in_offsets, self.in_sources, np.asarray(vertices, dtype=np.int64))
        return sources, targets

    def arcs(self) -> List[Tuple[int, int]]:
        return list(zip(self.arc_sources.tolist(), self.arc_targets.tolist()))

    def to_edge_list(self) -> str:
        """Serializes the arcs with their original vertex ids, one `src dst` per line."""
        ids = self.original_ids
        return "".join(
            f"{ids[s]} {ids[t]}\n" for s, t in zip(self.arc_sources, self.arc_targets)
        )

    def __repr__(self) -> str:
        return f"DirectedGraph(n={self.n}, m={self.m})"


def _is_size_line(tokens: List[str], rest: List[Tuple[int, int]]) -> bool:
    """Detects a leading Matrix-Market style `rows cols entries` line."""
    if len(tokens) != 3 or not all(token.lstrip("-").isdigit() for token in tokens):
        return False
    rows, cols, entries = (int(token) for token in tokens)
    if rows == cols:
        return True
    if not rest:
        return False
    max_id = max(max(pair) for pair in rest)
    return max(rows, cols) == max_id and entries == len(rest)


def _parse_line(tokens: List[str], line: int) -> Tuple[int, int]:
    if len(tokens) not in (2, 3):
        raise GraphFormatError(
            f"expected 'src dst [weight]', got {len(tokens)} fields", line
        )
    try:
        source, target = int(tokens[0]), int(tokens[1])
        if len(tokens) == 3:
            float(tokens[2])
    except ValueError:
        raise GraphFormatError(f"non-numeric field in {' '.join(tokens)!r}", line) from None
    if source < 0 or target < 0:
        raise GraphFormatError("vertex ids must be non-negative", line)
    return source, target


def parse_edge_list(
    stream: Union[IO[bytes], IO[str], Iterable[Union[bytes, str]]],
    options: Optional[ParseOptions] = None,
) -> DirectedGraph:
    """Parses an edge list (or Matrix-Market coordinate file) into a digraph.

    Lines are `src dst [weight]`, separated by whitespace or commas. Lines starting
    with `%` or `#` are comments. Weights are ignored since every arc has unit weight.
    Vertex ids are 0-based if the smallest id is 0, else 1-based, and are compacted to
    a dense range.

    Raises:
        GraphFormatError: For malformed lines (with their line number) or empty input.
    """
    options = options or ParseOptions()

    data: List[Tuple[int, List[str]]] = []
    for line_number, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                raise GraphFormatError("invalid UTF-8", line_number) from None
        line = raw.strip()
        if not line or line[0] in "%#":
            continue
        data.append((line_number, _SEPARATOR.split(line)))

    if not data:
        raise GraphFormatError("empty input: no arcs found")

    first_line, first_tokens = data[0]
    parsed = [_parse_line(tokens, line) for line, tokens in data[1:]]
    if _is_size_line(first_tokens, parsed):
        logger.debug("Skipping size line {}: {}", first_line, " ".join(first_tokens))
        if not parsed:
            raise GraphFormatError("empty input: only a size line found")
    else:
        parsed.insert(0, _parse_line(first_tokens, first_line))

    pairs = np.array(parsed, dtype=np.int64)
    zero_based = int(pairs.min()) == 0
    original_ids, dense = np.unique(pairs, return_inverse=True)
    dense = dense.reshape(pairs.shape)

    graph = DirectedGraph._build(
        dense[:, 0],
        dense[:, 1],
        len(original_ids),
        original_ids,
        options.undirected,
        options.deduplicate,
    )
    logger.debug(
        "Parsed graph with {} vertices and {} arcs ({}-based ids, {} self-loops dropped)",
        graph.n,
        graph.m,
        0 if zero_based else 1,
        graph.self_loops_dropped,
    )
    return graph


def read_graph(path: Union[str, Path], undirected: bool = False, deduplicate: bool = False) -> DirectedGraph:
    """Reads an edge-list file, see `parse_edge_list`."""
    with open(path, "rb") as stream:
        return parse_edge_list(stream, ParseOptions(undirected=undirected, deduplicate=deduplicate))
