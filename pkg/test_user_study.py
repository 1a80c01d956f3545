"""
Pruebas del analisis de comparaciones pareadas (umbral R' y ranking)
"""

import pandas as pd
import pytest

from human_motion_transfer.evaluation.user_study import (
    StudyDesign,
    design_from_votes,
    load_votes,
    lookup_critical_value,
    rank_methods,
    significance_threshold,
    validate_vote_budget,
    vote_budget,
)
from human_motion_transfer.exceptions import StudyError

TABLE = [{"t": 4, "alpha": 0.01, "W": 4.405}, {"t": 3, "alpha": 0.01, "W": 4.125}]


def test_threshold_for_four_methods():
    design = StudyDesign(t=4, m=54, W=4.405)
    assert significance_threshold(design) == pytest.approx(32.62001, abs=1e-5)


def test_threshold_for_three_methods():
    design = StudyDesign(t=3, m=16, W=4.125)
    assert significance_threshold(design) == pytest.approx(14.53942, abs=1e-5)


def test_zero_critical_value():
    assert significance_threshold(StudyDesign(t=4, m=54, W=0.0)) == pytest.approx(0.25)


def test_missing_critical_value():
    with pytest.raises(StudyError):
        significance_threshold(StudyDesign(t=4, m=54))


def test_four_distinct_groups():
    votes = {"ours": 257, "baseline_a": 194, "baseline_b": 143, "pose_only": 54}
    report = rank_methods(StudyDesign(t=4, m=54, W=4.405, votes=votes))
    assert report.num_groups == 4
    assert [row.method for row in report.rows] == ["ours", "baseline_a", "baseline_b", "pose_only"]
    assert [row.gap_to_next for row in report.rows] == [63, 51, 89, None]
    assert all(row.significant for row in report.rows[:-1])


def test_wider_gaps_also_separate():
    votes = {"a": 243, "b": 205, "c": 135, "d": 65}
    assert rank_methods(StudyDesign(t=4, m=54, W=4.405, votes=votes)).num_groups == 4


def test_three_method_study():
    votes = {"ours": 103, "baseline": 76, "pose_only": 13}
    report = rank_methods(StudyDesign(t=3, m=16, W=4.125, votes=votes))
    assert report.num_groups == 3
    assert report.threshold == pytest.approx(14.53942, abs=1e-5)


def test_small_gap_shares_rank():
    votes = {"a": 100, "b": 90, "c": 50, "d": 10}
    report = rank_methods(StudyDesign(t=4, m=54, W=4.405, votes=votes))
    assert [row.rank for row in report.rows] == [1, 1, 2, 3]
    assert report.rows[0].significant is False
    assert report.num_groups == 3


def test_vote_count_must_match_methods():
    with pytest.raises(StudyError):
        rank_methods(StudyDesign(t=4, m=54, W=4.405, votes={"a": 1, "b": 2}))


def test_declared_methods_need_votes():
    design = StudyDesign(t=2, m=5, W=3.0, votes={"a": 3, "b": 2}, methods=["a", "c"])
    with pytest.raises(StudyError):
        rank_methods(design)


def test_vote_budget():
    design = StudyDesign(t=4, m=54, W=4.405, votes={"a": 257, "b": 194, "c": 143, "d": 54}, comparisons_per_pair=2)
    assert vote_budget(design) == 648
    assert validate_vote_budget(design) == 648
    assert vote_budget(StudyDesign(t=3, m=16, comparisons_per_pair=4)) == 192
    with pytest.raises(StudyError):
        validate_vote_budget(StudyDesign(t=4, m=54, W=4.405, votes={"a": 257, "b": 194, "c": 143, "d": 54}))


def test_lookup_critical_value():
    assert lookup_critical_value(4, 0.01, TABLE) == 4.405
    with pytest.raises(StudyError):
        lookup_critical_value(5, 0.01, TABLE)


def test_design_from_votes_uses_table():
    design = design_from_votes({"a": 10, "b": 5, "c": 1}, m=16, critical_values=TABLE)
    assert design.t == 3 and design.W == 4.125


def test_invalid_design_is_study_error():
    with pytest.raises(StudyError):
        design_from_votes({"a": -1, "b": 3}, m=4, W=2.0)
    with pytest.raises(StudyError):
        design_from_votes({"a": 1, "b": 3}, m=0, W=2.0)


def test_load_votes_aggregates(tmp_path):
    path = tmp_path / "votes.csv"
    pd.DataFrame(
        {"method": ["a", "b", "a", "c"], "participant": [1, 1, 2, 2], "vote": [1, 1, 1, 0]}
    ).to_csv(path, index=False)
    assert load_votes(path) == {"a": 2, "b": 1, "c": 0}


def test_load_votes_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_votes(tmp_path / "none.csv")
    path = tmp_path / "bad.csv"
    path.write_text("method,vote\na,1\n", encoding="utf-8")
    with pytest.raises(StudyError):
        load_votes(path)


def test_report_text_and_csv(tmp_path):
    votes = {"ours": 257, "baseline_a": 194, "baseline_b": 143, "pose_only": 54}
    report = rank_methods(StudyDesign(t=4, m=54, W=4.405, votes=votes))
    assert "R' = 32.62001" in report.to_text()
    frame = pd.read_csv(report.to_csv(tmp_path / "ranking.csv"))
    assert list(frame["rank"]) == [1, 2, 3, 4]
