import io
from pathlib import Path

import numpy as np
import pytest

from heavymut.graph_io import DirectedGraph, GraphFormatError, ParseOptions, parse_edge_list, read_graph


def _parse(text: str, **options: bool) -> DirectedGraph:
    return parse_edge_list(io.StringIO(text), ParseOptions(**options))


def test_one_based_ids_are_compacted() -> None:
    graph = _parse("1 2\n2 3\n3 1\n")
    assert graph.n == 3
    assert graph.m == 3
    np.testing.assert_array_equal(graph.original_ids, [1, 2, 3])
    assert sorted(graph.arcs()) == [(0, 1), (1, 2), (2, 0)]


def test_zero_based_and_sparse_ids() -> None:
    graph = _parse("0 10\n10 20\n")
    assert graph.n == 3
    np.testing.assert_array_equal(graph.original_ids, [0, 10, 20])
    assert sorted(graph.arcs()) == [(0, 1), (1, 2)]


def test_comments_blank_lines_and_separators() -> None:
    graph = _parse("% comment\n# another\n\n1,2\n2\t3 0.5\n")
    assert graph.m == 2


def test_matrix_market_size_line_is_skipped() -> None:
    graph = _parse("%%MatrixMarket matrix coordinate pattern general\n3 3 2\n1 2\n2 3\n")
    assert graph.n == 3
    assert graph.m == 2


def test_weighted_first_line_is_not_a_size_line() -> None:
    graph = _parse("1 2 5\n2 3 1\n")
    assert graph.m == 2


def test_self_loops_are_dropped() -> None:
    graph = _parse("1 1\n1 2\n2 2\n")
    assert graph.m == 1
    assert graph.self_loops_dropped == 2


def test_parallel_arcs_are_kept_unless_deduplicated() -> None:
    text = "1 2\n1 2\n2 1\n"
    assert _parse(text).m == 3
    deduplicated = _parse(text, deduplicate=True)
    assert deduplicated.m == 2
    assert deduplicated.deduplicated


def test_undirected_edges_become_arc_pairs() -> None:
    graph = _parse("1 2\n2 3\n", undirected=True)
    assert graph.m == 4
    assert sorted(graph.arcs()) == [(0, 1), (1, 0), (1, 2), (2, 1)]


@pytest.mark.parametrize(
    "text, line",
    [("1 2\nfoo bar\n", 2), ("1 2\n3\n", 2), ("1 2 3 4\n", 1), ("1 -2\n", 1)],
)
def test_malformed_lines_report_their_number(text: str, line: int) -> None:
    with pytest.raises(GraphFormatError, match=f"line {line}:") as info:
        _parse(text)
    assert info.value.line == line


@pytest.mark.parametrize("text", ["", "% only comments\n\n", "3 3 0\n"])
def test_empty_input_is_an_error(text: str) -> None:
    with pytest.raises(GraphFormatError):
        _parse(text)


def test_bytes_input() -> None:
    graph = parse_edge_list(io.BytesIO(b"1 2\n2 3\n"))
    assert graph.m == 2


def test_invalid_utf8_reports_its_line() -> None:
    with pytest.raises(GraphFormatError, match="line 2:") as info:
        parse_edge_list(io.BytesIO(b"1 2\n\xff\xfe 3\n2 3\n"))
    assert info.value.line == 2


def test_csr_adjacency(triangle: DirectedGraph) -> None:
    np.testing.assert_array_equal(triangle.out_degree(), [1, 1, 1])
    np.testing.assert_array_equal(triangle.in_degree(), [1, 1, 1])
    assert triangle.out_neighbors(0).tolist() == [1]
    assert triangle.in_neighbors(0).tolist() == [2]
    sources, targets = triangle.out_arcs_of(np.array([0, 2]))
    assert sorted(zip(sources.tolist(), targets.tolist())) == [(0, 1), (2, 0)]
    sources, targets = triangle.in_arcs_of(np.array([1]))
    assert list(zip(sources.tolist(), targets.tolist())) == [(0, 1)]


def test_graphs_are_immutable(triangle: DirectedGraph) -> None:
    with pytest.raises(ValueError):
        triangle.out_targets[0] = 2


def test_constructor_validates_arcs() -> None:
    with pytest.raises(ValueError):
        DirectedGraph(2, np.array([0]), np.array([0]))
    with pytest.raises(ValueError):
        DirectedGraph(2, np.array([0]), np.array([5]))


def test_edge_list_round_trip(edge_list: Path) -> None:
    graph = read_graph(edge_list)
    assert graph.n == 5
    assert graph.m == 7
    again = _parse(graph.to_edge_list())
    assert sorted(again.arcs()) == sorted(graph.arcs())
    np.testing.assert_array_equal(again.original_ids, graph.original_ids)


def test_from_arcs() -> None:
    graph = DirectedGraph.from_arcs([(0, 1), (1, 1), (3, 0)])
    assert graph.n == 4
    assert graph.m == 2
    assert graph.self_loops_dropped == 1
