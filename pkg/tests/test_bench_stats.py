import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from heavymut.bench.stats import (
    average_ranks,
    best_in_family,
    family_gap_summary,
    family_gaps,
    footprint,
    friedman_test,
    gap_summary,
    instance_gaps,
    mean_table,
    nemenyi_cd,
    nemenyi_pairs,
    rank_matrix,
    read_results,
    write_summaries,
)
from tests.conftest import results_frame


@pytest.fixture
def two_by_three() -> pd.DataFrame:
    return results_frame(
        {
            "g1": {"A": [10.0, 10.0], "B": [7.0, 9.0], "C": [5.0, 5.0]},
            "g2": {"A": [3.0, 3.0], "B": [9.0, 9.0], "C": [2.0, 4.0]},
        }
    )


def test_ties_share_the_average_rank() -> None:
    results = results_frame({"g": {"a": [10.0], "b": [7.0], "c": [7.0], "d": [3.0]}})
    table = average_ranks(results, 10)
    assert table.average_ranks == {"a": 1.0, "b": 2.5, "c": 2.5, "d": 4.0}
    assert table.best() == "a"


def test_full_tie() -> None:
    results = results_frame({"g": {op: [1.0] for op in "abcde"}})
    assert set(average_ranks(results, 10).average_ranks.values()) == {3.0}


def test_average_ranks_over_instances(two_by_three: pd.DataFrame) -> None:
    table = average_ranks(two_by_three, 10)
    assert table.average_ranks == {"A": 1.75, "B": 1.5, "C": 2.75}
    assert table.instance_count == 2
    assert table.operator_count == 3
    assert table.per_instance["g2"] == {"A": 2.5, "B": 1.0, "C": 2.5}
    assert sum(table.average_ranks.values()) == pytest.approx(6.0)
    assert table.best() == "B"


def test_mean_table_keeps_the_order_of_appearance(two_by_three: pd.DataFrame) -> None:
    means = mean_table(two_by_three, 10)
    assert list(means.index) == ["g1", "g2"]
    assert list(means.columns) == ["A", "B", "C"]
    assert means.loc["g1", "B"] == 8.0
    ranks = rank_matrix(means)
    assert ranks.loc["g1"].tolist() == [1.0, 2.0, 3.0]


def test_unknown_checkpoint(two_by_three: pd.DataFrame) -> None:
    with pytest.raises(ValueError, match="available: 10"):
        mean_table(two_by_three, 20)


def test_missing_cells_are_reported() -> None:
    results = results_frame({"g1": {"a": [1.0], "b": [2.0]}, "g2": {"a": [1.0]}})
    with pytest.raises(ValueError, match=r"\(g2, b\)"):
        average_ranks(results, 10)


def test_incomplete_instances_are_skipped() -> None:
    results = results_frame(
        {"g1": {"a": [1.0], "b": [2.0]}, "g2": {"a": [np.nan], "b": [2.0]}, "g3": {"a": [5.0], "b": [2.0]}}
    )
    table = average_ranks(results, 10)
    assert table.instance_count == 2
    assert table.average_ranks == {"a": 1.5, "b": 1.5}
    with pytest.raises(ValueError):
        average_ranks(results_frame({"g": {"a": [np.nan], "b": [1.0]}}), 10)


def test_nemenyi_critical_difference() -> None:
    assert nemenyi_cd(7, 67) == pytest.approx(1.1006, abs=1e-3)
    assert nemenyi_cd(2, 25) == pytest.approx(1.960 / math.sqrt(25))
    assert nemenyi_cd(4, 10, alpha=0.10) < nemenyi_cd(4, 10)
    cds = [nemenyi_cd(5, N) for N in (5, 10, 50, 100)]
    assert cds == sorted(cds, reverse=True)


@pytest.mark.parametrize("k, N, alpha", [(1, 10, 0.05), (11, 10, 0.05), (3, 1, 0.05), (3, 10, 0.01)])
def test_nemenyi_unsupported_arguments(k: int, N: int, alpha: float) -> None:
    with pytest.raises(ValueError):
        nemenyi_cd(k, N, alpha)


def test_nemenyi_pairs(two_by_three: pd.DataFrame) -> None:
    pairs = nemenyi_pairs(average_ranks(two_by_three, 10), cd=1.0)
    assert len(pairs) == 3
    flagged = pairs[pairs["significant"]]
    assert flagged[["operator_a", "operator_b"]].values.tolist() == [["B", "C"]]
    assert pairs.loc[0, "rank_difference"] == pytest.approx(0.25)


def test_gaps() -> None:
    assert instance_gaps(results_frame({"g": {"a": [10.0], "b": [9.0]}}), 10)["g"] == pytest.approx(10.0)
    spread = results_frame(
        {
            "g1": {"a": [100.0], "b": [95.0]},
            "g2": {"a": [100.0], "b": [90.0]},
            "g3": {"a": [100.0], "b": [85.0]},
        }
    )
    assert gap_summary(spread, 10) == pytest.approx((5.0, 10.0, 15.0))
    same = results_frame({"g1": {"a": [4.0], "b": [4.0]}, "g2": {"a": [2.0], "b": [2.0]}})
    assert gap_summary(same, 10) == (0.0, 0.0, 0.0)
    zero = results_frame({"g": {"a": [0.0], "b": [-3.0]}})
    assert instance_gaps(zero, 10)["g"] == 0.0


def test_gaps_of_negative_means_are_positive() -> None:
    negative = results_frame({"g": {"a": [-1.0], "b": [-2.0]}})
    assert instance_gaps(negative, 10)["g"] == pytest.approx(100.0)


def test_best_in_family(operator_families: pd.DataFrame) -> None:
    ranks = average_ranks(operator_families, 10)
    assert ranks.average_ranks["pmut:3.5"] == pytest.approx(5 / 3)
    assert best_in_family(ranks, "pmut") == "pmut:3.5"
    assert best_in_family(ranks, "fmut") == "fmut:1.5"
    with pytest.raises(ValueError):
        best_in_family(ranks, "cmut")


def test_family_gaps(operator_families: pd.DataFrame) -> None:
    gaps = family_gaps(operator_families, 10)
    assert gaps.name == "pmut:3.5_vs_fmut:1.5_percent_at_10"
    np.testing.assert_allclose(gaps.loc[["g1", "g2", "g3"]], [300 / 98, 100 / 52, 0.0])
    minimum, mean, maximum = family_gap_summary(operator_families, 10)
    assert minimum == 0.0
    assert mean == pytest.approx((300 / 98 + 100 / 52) / 3)
    assert maximum == pytest.approx(300 / 98)


def test_family_gaps_are_negative_when_the_rival_leads() -> None:
    results = results_frame({"g": {"pmut:2": [-2.0], "fmut:2": [-1.0]}})
    assert family_gaps(results, 10)["g"] == pytest.approx(-100.0)
    assert family_gaps(results, 10, leader="fmut", rival="pmut")["g"] == pytest.approx(100.0)


def test_friedman_matches_scipy() -> None:
    rng = np.random.default_rng(0)
    means = pd.DataFrame(rng.normal(size=(12, 4)), columns=list("abcd"))
    result = friedman_test(means)
    expected = stats.friedmanchisquare(*(means[column] for column in means.columns))
    assert result.chi_square == pytest.approx(expected.statistic)
    assert 0.0 <= result.p_value <= 1.0
    assert result.instance_count == 12
    assert result.operator_count == 4


def test_friedman_with_perfectly_consistent_ranks() -> None:
    means = pd.DataFrame([[3.0, 2.0, 1.0]] * 5, columns=list("abc"))
    result = friedman_test(means)
    assert result.chi_square == pytest.approx(10.0)
    assert math.isinf(result.f_statistic)
    assert result.p_value == 0.0
    with pytest.raises(ValueError):
        friedman_test(means.iloc[:1])


def test_footprint() -> None:
    results = results_frame({"g1": {"a": [100.0], "b": [99.5], "c": [90.0]}, "g2": {"a": [1.0], "b": [2.0], "c": [2.0]}})
    flags = footprint(results, 10)
    assert flags.loc["g1", ["a", "b", "c"]].tolist() == [True, True, False]
    assert flags.loc["g2", ["a", "b", "c"]].tolist() == [False, True, True]
    assert flags["operators_within"].tolist() == [2, 2]


def test_write_summaries(tmp_path: Path) -> None:
    results = pd.concat(
        [
            results_frame({"g1": {"a": [3.0], "b": [1.0]}, "g2": {"a": [2.0], "b": [2.0]}}, checkpoint=10),
            results_frame({"g1": {"a": [4.0], "b": [5.0]}, "g2": {"a": [6.0], "b": [2.0]}}, checkpoint=20),
        ],
        ignore_index=True,
    )
    written = write_summaries(results, [10, 20], tmp_path / "summaries")
    assert [path.name for path in written] == ["ranks.csv", "gaps.csv", "footprint_at_10.csv", "footprint_at_20.csv"]
    ranks = pd.read_csv(written[0], index_col="operator")
    assert list(ranks.columns) == ["avg_rank_at_10", "avg_rank_at_20"]
    assert ranks.loc["a", "avg_rank_at_10"] == 1.25
    gaps = pd.read_csv(written[1], index_col="instance")
    assert list(gaps.columns) == ["gap_percent_at_10", "gap_percent_at_20"]
    assert gaps.loc["g2", "gap_percent_at_20"] == pytest.approx(100 * 4 / 6)
    footprint_header = written[2].read_text(encoding="utf-8").splitlines()[0]
    assert footprint_header == "instance,a,b,operators_within"


def test_read_results(tmp_path: Path) -> None:
    path = tmp_path / "results.csv"
    results_frame({"g": {"a": [1.0]}}).to_csv(path, index=False)
    assert len(read_results(path)) == 1
    pd.DataFrame({"instance": ["g"]}).to_csv(path, index=False)
    with pytest.raises(ValueError, match="best_fitness"):
        read_results(path)


def test_write_summaries_with_operator_families(operator_families: pd.DataFrame, tmp_path: Path) -> None:
    written = write_summaries(operator_families, [10], tmp_path)
    gaps = pd.read_csv(written[1], index_col="instance")
    assert list(gaps.columns) == ["gap_percent_at_10", "pmut:3.5_vs_fmut:1.5_percent_at_10"]
    assert gaps.loc["g1", "gap_percent_at_10"] == pytest.approx(20.0)
    assert gaps.loc["g2", "pmut:3.5_vs_fmut:1.5_percent_at_10"] == pytest.approx(100 / 52)
