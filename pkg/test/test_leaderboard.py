"""
Tests for leaderboard ranking, table building and rendering.
"""

import json
import sys
from pathlib import Path

import pytest

# Add app directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "app"))

from errors import EmptyInput, LengthMismatch, ParseError
from leaderboard import (
    AVERAGE_COLUMN,
    LeaderboardConfig,
    LeaderboardTable,
    build_table,
    highlight,
    rank_column,
    render_leaderboard,
)
from perception_types import HighlightMark, LeaderboardMetric, TableFormat

FIXTURES = Path(__file__).parent / "fixtures"

BEST = HighlightMark.Best
SECOND = HighlightMark.Second
NONE = HighlightMark.NoMark


@pytest.fixture
def vr_reports():
    """Fixture providing the five visual-rating reports."""
    return [
        json.loads(path.read_text(encoding="utf-8"))
        for path in sorted((FIXTURES / "reports").glob("*.json"))
    ]


@pytest.fixture
def vqa_reports():
    """Fixture providing two accuracy reports."""
    def report(model, comp, emo, overall):
        return {
            "kind": "vqa",
            "model": model,
            "overall": {"accuracy": overall},
            "per_category": {
                "Comp.": {"accuracy": comp},
                "Emo.": {"accuracy": emo},
            },
        }

    return [report("model-a", 0.75, 0.5, 0.625), report("model-b", 0.5, 0.75, 0.625)]


def test_rank_distinct_values():
    """Maximum is best, next value second."""
    assert rank_column([0.9, 0.8, 0.7]) == [BEST, SECOND, NONE]


def test_rank_tied_maximum():
    """A tied maximum marks both best and leaves second-best empty."""
    assert rank_column([0.9, 0.9, 0.7]) == [BEST, BEST, NONE]


def test_rank_tied_second():
    """A tie on the runner-up value leaves second-best empty."""
    assert rank_column([0.7, 0.9, 0.7, 0.1]) == [NONE, BEST, NONE, NONE]
    assert rank_column([0.9, 0.8, 0.8]) == [BEST, NONE, NONE]
    assert rank_column([0.8, None, 0.9, 0.8, 0.5]) == [NONE, NONE, BEST, NONE, NONE]


def test_rank_at_most_one_second():
    """Every column has at most one second-best cell."""
    columns = [
        [0.5, 0.4, 0.4, 0.3],
        [0.1, 0.2, 0.3, 0.3, 0.2],
        [1.0, 0.0, 0.0, 0.0],
        [0.6, 0.5, None, 0.4],
    ]
    for column in columns:
        assert rank_column(column).count(SECOND) <= 1
    assert rank_column([0.6, 0.5, None, 0.4]) == [BEST, SECOND, NONE, NONE]


def test_rank_absent_cells():
    """Absent cells are never marked."""
    assert rank_column([None, 0.5, None]) == [NONE, BEST, NONE]
    assert rank_column([None, None]) == [NONE, NONE]


def test_vr_table_layout(vr_reports):
    """Models become rows, datasets columns, with an average column."""
    table = build_table(vr_reports, LeaderboardConfig(metric=LeaderboardMetric.SRCC))
    assert table.rows == ("model-a", "model-b", "model-c")
    assert table.columns == ("KonIQ", "SPAQ", AVERAGE_COLUMN)
    assert table.values[0][0] == 0.9
    # model-c has no SPAQ report: absent cell and no average
    assert table.values[2][1] is None
    assert table.values[2][2] is None
    assert table.values[0][2] == pytest.approx(0.8)
    assert table.values[1][2] == pytest.approx(0.775)


def test_vr_table_plcc_and_combined(vr_reports):
    """Other metrics pick their own fields and averages."""
    plcc_table = build_table(vr_reports, LeaderboardConfig(metric="plcc"))
    assert plcc_table.values[1][0] == 0.9
    assert plcc_table.values[0][2] == pytest.approx(0.8)

    combined = build_table(vr_reports, LeaderboardConfig(metric="combined", average=False))
    assert combined.columns == ("KonIQ", "SPAQ")
    assert combined.values[1][1] == 0.725


def test_duplicate_report(vr_reports):
    """Two reports for the same model and dataset are rejected."""
    with pytest.raises(ParseError):
        build_table(vr_reports + [vr_reports[0]])


def test_no_matching_reports(vr_reports):
    """An accuracy leaderboard needs VQA reports."""
    with pytest.raises(EmptyInput):
        build_table(vr_reports, LeaderboardConfig(metric=LeaderboardMetric.Accuracy))


def test_text_rendering(vr_reports):
    """Plain text marks best with * and second with +, absent as -/-."""
    table = build_table(vr_reports)
    text = render_leaderboard(table, TableFormat.Text).decode("utf-8")
    lines = text.splitlines()
    assert lines[0].split(" | ")[0].strip() == "Model"
    assert "0.9000*" in lines[2]
    assert "0.8000+" in lines[3]
    assert "-/-" in lines[4]
    assert lines[-1] == "* best, + second best, -/- no valid result"


def test_markdown_rendering(vr_reports):
    """Markdown uses bold for best and underline for second-best."""
    table = build_table(vr_reports, LeaderboardConfig(format="markdown"))
    text = render_leaderboard(table, TableFormat.Markdown).decode("utf-8")
    lines = text.splitlines()
    assert lines[0] == "| Model | KonIQ | SPAQ | Avg. |"
    assert lines[1] == "|---|---:|---:|---:|"
    assert lines[2] == "| model-a | **0.9000** | <u>0.7000</u> | **0.8000** |"
    assert lines[3] == "| model-b | <u>0.8000</u> | **0.7500** | <u>0.7750</u> |"
    assert lines[4] == "| model-c | 0.6000 | -/- | -/- |"


def test_csv_rendering(vr_reports):
    """CSV carries each value with its rank label."""
    table = build_table(vr_reports)
    text = render_leaderboard(table, TableFormat.CSV).decode("utf-8")
    lines = text.splitlines()
    assert lines[0] == "model,KonIQ,KonIQ_rank,SPAQ,SPAQ_rank,Avg.,Avg._rank"
    assert lines[1] == "model-a,0.9000,best,0.7000,second,0.8000,best"
    assert lines[3] == "model-c,0.6000,,-/-,,-/-,"


def test_rendering_is_deterministic(vr_reports):
    """Rendering the same reports twice gives identical bytes."""
    table = build_table(vr_reports)
    for fmt in TableFormat:
        assert render_leaderboard(table, fmt) == render_leaderboard(build_table(vr_reports), fmt)


def test_accuracy_table(vqa_reports):
    """Accuracy tables show category percentages and an Overall column."""
    table = build_table(vqa_reports, LeaderboardConfig(metric=LeaderboardMetric.Accuracy))
    assert table.columns == ("Comp.", "Emo.", "Overall")
    assert table.values[0] == (75.0, 50.0, 62.5)
    marks = highlight(table)
    assert marks[0] == [BEST, SECOND, BEST]
    assert marks[1] == [SECOND, BEST, BEST]
    markdown = render_leaderboard(table, TableFormat.Markdown).decode("utf-8")
    assert "**75.00%**" in markdown
    assert "<u>50.00%</u>" in markdown


def test_accuracy_report_without_overall(vqa_reports):
    """A VQA report missing its overall accuracy is a parse error naming the model."""
    del vqa_reports[1]["overall"]
    with pytest.raises(ParseError) as exc_info:
        build_table(vqa_reports, LeaderboardConfig(metric=LeaderboardMetric.Accuracy))
    assert exc_info.value.context["model"] == "model-b"
    assert exc_info.value.context["field"] == "overall"


@pytest.mark.parametrize(
    "per_category",
    [["Comp."], {"Comp.": 0.5}, {"Comp.": {"correct": 1}}, {"Comp.": {"accuracy": "high"}}],
)
def test_accuracy_report_bad_categories(vqa_reports, per_category):
    """Malformed per-category entries are parse errors."""
    vqa_reports[0]["per_category"] = per_category
    with pytest.raises(ParseError):
        build_table(vqa_reports, LeaderboardConfig(metric=LeaderboardMetric.Accuracy))


def test_vr_report_malformed_fields(vr_reports):
    """Missing model names and non-numeric correlations are parse errors."""
    no_model = dict(vr_reports[0])
    del no_model["model"]
    with pytest.raises(ParseError):
        build_table([no_model])

    text_value = dict(vr_reports[0], srcc="0.9")
    with pytest.raises(ParseError) as exc_info:
        build_table([text_value])
    assert exc_info.value.context["field"] == "srcc"


def test_decimals_override(vr_reports):
    """A decimals override changes the rendered precision."""
    table = build_table(vr_reports, LeaderboardConfig(decimals=2))
    assert table.render_cell(0.775) == "0.78"
    assert table.render_cell(None) == "-/-"


def test_table_shape_validation():
    """Rows must match their labels and the column count."""
    with pytest.raises(LengthMismatch):
        LeaderboardTable(rows=("a",), columns=("x", "y"), values=((0.1,),))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
