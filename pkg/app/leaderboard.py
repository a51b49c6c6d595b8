"""
Leaderboard tables built from evaluation reports, with best and second-best
highlighting per column.
"""

import csv
import io
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from errors import EmptyInput, InvalidConfig, LengthMismatch, ParseError
from metrics import (
    ABSENT,
    CORRELATION_DECIMALS,
    PERCENT_DECIMALS,
    dataset_average,
    render_correlation,
    render_percent,
)
from perception_types import HighlightMark, LeaderboardMetric, TableFormat

AVERAGE_COLUMN: str = "Avg."
OVERALL_COLUMN: str = "Overall"
ROW_HEADER: str = "Model"


@dataclass(frozen=True)
class LeaderboardConfig:
    format: TableFormat = TableFormat.Text
    metric: LeaderboardMetric = LeaderboardMetric.SRCC
    average: bool = True
    decimals: int | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "format", TableFormat(self.format))
            object.__setattr__(self, "metric", LeaderboardMetric(self.metric))
        except ValueError as exc:
            raise InvalidConfig(str(exc), key="leaderboard") from None
        if self.decimals is not None and not 0 <= self.decimals <= 10:
            raise InvalidConfig(
                f"decimals must be in 0..10, got {self.decimals}", key="leaderboard.decimals"
            )


@dataclass(frozen=True)
class LeaderboardTable:
    rows: tuple[str, ...]
    columns: tuple[str, ...]
    values: tuple[tuple[float | None, ...], ...]
    # "correlation" renders plain decimals, "percent" appends a percent sign
    value_kind: str = "correlation"
    decimals: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "values", tuple(tuple(r) for r in self.values))
        if len(self.values) != len(self.rows):
            raise LengthMismatch(f"{len(self.values)} value rows for {len(self.rows)} labels")
        for label, row in zip(self.rows, self.values):
            if len(row) != len(self.columns):
                raise LengthMismatch(
                    f"row {label!r} has {len(row)} cells for {len(self.columns)} columns"
                )
        if self.value_kind not in ("correlation", "percent"):
            raise InvalidConfig(f"unknown value kind {self.value_kind!r}")

    def column(self, index: int) -> list[float | None]:
        return [row[index] for row in self.values]

    def render_cell(self, value: float | None) -> str:
        if value is None:
            return ABSENT
        if self.value_kind == "percent":
            return render_percent(value, PERCENT_DECIMALS if self.decimals is None else self.decimals)
        decimals = CORRELATION_DECIMALS if self.decimals is None else self.decimals
        return render_correlation(value, decimals)


def rank_column(values: Sequence[float | None]) -> list[HighlightMark]:
    """
    Marks the maximum best and the next distinct value second-best. A tie on
    the maximum marks every tied cell best and leaves second-best empty, and
    so does a tie on the second value. Absent cells are never marked.
    """
    present = sorted({v for v in values if v is not None}, reverse=True)
    marks = [HighlightMark.NoMark] * len(values)
    if not present:
        return marks

    top = present[0]
    top_count = sum(1 for v in values if v == top)
    second = present[1] if len(present) > 1 and top_count == 1 else None
    if second is not None and sum(1 for v in values if v == second) > 1:
        second = None

    for i, value in enumerate(values):
        if value is None:
            continue
        if value == top:
            marks[i] = HighlightMark.Best
        elif second is not None and value == second:
            marks[i] = HighlightMark.Second
    return marks


def highlight(table: LeaderboardTable) -> list[list[HighlightMark]]:
    by_column = [rank_column(table.column(j)) for j in range(len(table.columns))]
    return [[by_column[j][i] for j in range(len(table.columns))] for i in range(len(table.rows))]


def _first_seen(items: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(items))


def _model(report: Mapping[str, Any]) -> str:
    model = report.get("model")
    if not isinstance(model, str) or not model:
        raise ParseError("report has no model name", model=model)
    return model


def _number(value: Any, model: str, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{field} must be a number, got {value!r}", model=model, field=field)
    return float(value)


def _accuracy(group: Any, model: str, field: str) -> float:
    if not isinstance(group, Mapping) or "accuracy" not in group:
        raise ParseError(f"{field} has no accuracy", model=model, field=field)
    return _number(group["accuracy"], model, f"{field}.accuracy")


def _vr_table(
    reports: Sequence[Mapping[str, Any]], metric: LeaderboardMetric, average: bool
) -> tuple[list[str], list[str], list[list[float | None]]]:
    cells: dict[tuple[str, str], Mapping[str, Any]] = {}
    for report in reports:
        key = (_model(report), str(report.get("dataset", "")))
        if key in cells:
            raise ParseError(f"duplicate report for model {key[0]} on {key[1]}")
        cells[key] = report

    models = _first_seen(m for m, _ in cells)
    datasets = _first_seen(d for _, d in cells)
    columns = datasets + ([AVERAGE_COLUMN] if average else [])

    values: list[list[float | None]] = []
    for model in models:
        row: list[float | None] = []
        pairs: list[tuple[float, float]] = []
        for dataset in datasets:
            report = cells.get((model, dataset))
            value = None if report is None else report.get(metric.value)
            row.append(None if value is None else _number(value, model, metric.value))
            if report is not None and report.get("srcc") is not None and report.get("plcc") is not None:
                pairs.append(
                    (_number(report["srcc"], model, "srcc"), _number(report["plcc"], model, "plcc"))
                )
        if average:
            # the average only covers rows with every dataset present
            if len(pairs) == len(datasets):
                avg_srcc, avg_plcc = dataset_average(pairs)
                row.append(
                    {
                        LeaderboardMetric.SRCC: avg_srcc,
                        LeaderboardMetric.PLCC: avg_plcc,
                        LeaderboardMetric.Combined: (avg_srcc + avg_plcc) / 2.0,
                    }[metric]
                )
            else:
                row.append(None)
        values.append(row)
    return models, columns, values


def _accuracy_table(
    reports: Sequence[Mapping[str, Any]],
) -> tuple[list[str], list[str], list[list[float | None]]]:
    by_model: dict[str, dict[str, float]] = {}
    overall: dict[str, float] = {}
    for report in reports:
        model = _model(report)
        if model in by_model:
            raise ParseError(f"duplicate accuracy report for model {model}")
        per_category = report.get("per_category") or {}
        if not isinstance(per_category, Mapping):
            raise ParseError("per_category must be an object", model=model)
        by_model[model] = {
            str(c): _accuracy(group, model, f"per_category.{c}")
            for c, group in per_category.items()
        }
        overall[model] = _accuracy(report.get("overall"), model, "overall")

    categories = _first_seen(c for groups in by_model.values() for c in groups)
    columns = categories + [OVERALL_COLUMN]

    values: list[list[float | None]] = []
    for model, groups in by_model.items():
        row: list[float | None] = [100.0 * groups[c] if c in groups else None for c in categories]
        row.append(100.0 * overall[model])
        values.append(row)
    return list(by_model), columns, values


def build_table(
    reports: Sequence[Mapping[str, Any]], cfg: LeaderboardConfig | None = None
) -> LeaderboardTable:
    cfg = cfg or LeaderboardConfig()
    wanted = "vqa" if cfg.metric == LeaderboardMetric.Accuracy else "vr"
    usable = [r for r in reports if r.get("kind") == wanted]
    if not usable:
        raise EmptyInput(f"no {wanted} reports for metric {cfg.metric.value}")

    if cfg.metric == LeaderboardMetric.Accuracy:
        rows, columns, values = _accuracy_table(usable)
        kind = "percent"
    else:
        rows, columns, values = _vr_table(usable, cfg.metric, cfg.average)
        kind = "correlation"

    return LeaderboardTable(
        rows=tuple(rows),
        columns=tuple(columns),
        values=tuple(tuple(r) for r in values),
        value_kind=kind,
        decimals=cfg.decimals,
    )


def _render_text(table: LeaderboardTable, marks: list[list[HighlightMark]]) -> str:
    suffix = {HighlightMark.Best: "*", HighlightMark.Second: "+", HighlightMark.NoMark: ""}
    header = [ROW_HEADER, *table.columns]
    body = [
        [label, *(table.render_cell(v) + suffix[m] for v, m in zip(row, row_marks))]
        for label, row, row_marks in zip(table.rows, table.values, marks)
    ]
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    line_format = " | ".join(f"{{:<{w}}}" for w in widths)

    lines = [line_format.format(*header).rstrip()]
    lines.append("-" * (sum(widths) + 3 * (len(widths) - 1)))
    lines.extend(line_format.format(*r).rstrip() for r in body)
    lines.append("")
    lines.append("* best, + second best, -/- no valid result")
    return "\n".join(lines) + "\n"


def _render_markdown(table: LeaderboardTable, marks: list[list[HighlightMark]]) -> str:
    def decorate(value: float | None, mark: HighlightMark) -> str:
        text = table.render_cell(value)
        if mark == HighlightMark.Best:
            return f"**{text}**"
        if mark == HighlightMark.Second:
            return f"<u>{text}</u>"
        return text

    lines = [
        "| " + " | ".join([ROW_HEADER, *table.columns]) + " |",
        "|" + "---|" + "---:|" * len(table.columns),
    ]
    for label, row, row_marks in zip(table.rows, table.values, marks):
        cells = [decorate(v, m) for v, m in zip(row, row_marks)]
        lines.append("| " + " | ".join([label, *cells]) + " |")
    return "\n".join(lines) + "\n"


def _render_csv(table: LeaderboardTable, marks: list[list[HighlightMark]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = [ROW_HEADER.lower()]
    for column in table.columns:
        header.extend([column, f"{column}_rank"])
    writer.writerow(header)
    for label, row, row_marks in zip(table.rows, table.values, marks):
        out = [label]
        for value, mark in zip(row, row_marks):
            out.extend([table.render_cell(value), "" if mark == HighlightMark.NoMark else mark.value])
        writer.writerow(out)
    return buffer.getvalue()


def render_leaderboard(table: LeaderboardTable, format: TableFormat = TableFormat.Text) -> bytes:
    marks = highlight(table)
    renderer = {
        TableFormat.Text: _render_text,
        TableFormat.Markdown: _render_markdown,
        TableFormat.CSV: _render_csv,
    }[TableFormat(format)]
    return renderer(table, marks).encode("utf-8")
