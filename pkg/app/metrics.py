"""
Evaluation statistics: SRCC, PLCC, the combined visual-rating score and the
accuracy breakdowns of the question-answering tables.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import pearsonr, rankdata

from errors import EmptyInput, LengthMismatch, ParseError, ZeroVariance
from perception_types import Domain
from rewards import vqa_reward

PERCENT_DECIMALS: int = 2
CORRELATION_DECIMALS: int = 4
ABSENT: str = "-/-"


@dataclass(frozen=True)
class EvalRecord:
    id: str
    domain: Domain
    category: str
    template: str
    predicted: str
    gold: str
    options: tuple[str, ...] = ()

    def __post_init__(self):
        if not str(self.id).strip():
            raise ParseError("EvalRecord id must be non-empty")
        try:
            domain = Domain.parse(self.domain)
        except ValueError as exc:
            raise ParseError(str(exc), id=self.id) from None
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "options", tuple(self.options))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvalRecord":
        record_id = data.get("id")
        missing = [
            key
            for key in ("id", "domain", "category", "template", "predicted", "gold")
            if key not in data
        ]
        if missing:
            raise ParseError(
                f"EvalRecord missing field(s): {', '.join(missing)}", id=record_id
            )
        return cls(
            id=str(data["id"]),
            domain=data["domain"],
            category=str(data["category"]),
            template=str(data["template"]),
            predicted=str(data["predicted"]),
            gold=str(data["gold"]),
            options=tuple(str(o) for o in data.get("options") or ()),
        )


@dataclass(frozen=True)
class VrSeries:
    predictions: np.ndarray
    ground_truths: np.ndarray

    def __post_init__(self):
        pred = np.asarray(self.predictions, dtype=np.float64)
        gt = np.asarray(self.ground_truths, dtype=np.float64)
        if pred.ndim != 1 or gt.ndim != 1 or pred.shape != gt.shape:
            raise LengthMismatch(
                f"{pred.size} predictions vs {gt.size} ground truths"
            )
        if pred.size < 2:
            raise LengthMismatch(f"need at least 2 rated items, got {pred.size}")
        if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(gt))):
            raise ParseError("ratings must be finite numbers")
        object.__setattr__(self, "predictions", pred)
        object.__setattr__(self, "ground_truths", gt)

    def __len__(self) -> int:
        return int(self.predictions.size)


@dataclass(frozen=True)
class GroupAccuracy:
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total

    @property
    def percent(self) -> Decimal:
        return Decimal(100 * self.correct) / Decimal(self.total)

    def to_dict(self) -> dict[str, Any]:
        return {
            "correct": self.correct,
            "total": self.total,
            "accuracy": self.accuracy,
            "display": render_percent(self.percent),
        }


@dataclass(frozen=True)
class AccuracyReport:
    overall: GroupAccuracy
    per_category: dict[str, GroupAccuracy] = field(default_factory=dict)
    per_template: dict[str, GroupAccuracy] = field(default_factory=dict)
    per_domain: dict[str, GroupAccuracy] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "overall": self.overall.to_dict(),
            "per_category": {k: v.to_dict() for k, v in self.per_category.items()},
            "per_template": {k: v.to_dict() for k, v in self.per_template.items()},
            "per_domain": {k: v.to_dict() for k, v in self.per_domain.items()},
        }


def _check_variance(values: np.ndarray, name: str) -> None:
    if np.ptp(values) == 0:
        raise ZeroVariance(f"{name} are constant; correlation is undefined")


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    r = float(pearsonr(x, y).statistic)
    return min(max(r, -1.0), 1.0)


def plcc(series: VrSeries) -> float:
    _check_variance(series.predictions, "predictions")
    _check_variance(series.ground_truths, "ground truths")
    return _pearson(series.predictions, series.ground_truths)


def srcc(series: VrSeries) -> float:
    """Pearson correlation of average ranks; tied values share the mean rank."""
    pred_ranks = rankdata(series.predictions, method="average")
    gt_ranks = rankdata(series.ground_truths, method="average")
    _check_variance(pred_ranks, "prediction ranks")
    _check_variance(gt_ranks, "ground-truth ranks")
    return _pearson(pred_ranks, gt_ranks)


def combined_vr(srcc_value: float, plcc_value: float) -> float:
    return (srcc_value + plcc_value) / 2.0


def _default_match(record: EvalRecord) -> bool:
    return bool(vqa_reward(record.predicted, record.gold, record.options))


def _tally(
    records: Sequence[EvalRecord],
    hits: Sequence[bool],
    key: Callable[[EvalRecord], str],
) -> dict[str, GroupAccuracy]:
    correct: dict[str, int] = defaultdict(int)
    total: dict[str, int] = defaultdict(int)
    for record, hit in zip(records, hits):
        group = key(record)
        total[group] += 1
        correct[group] += int(hit)
    return {g: GroupAccuracy(correct[g], total[g]) for g in sorted(total)}


def accuracy_breakdown(
    records: Iterable[EvalRecord],
    match: Callable[[EvalRecord], bool] | None = None,
) -> AccuracyReport:
    records = list(records)
    if not records:
        raise EmptyInput("accuracy_breakdown needs at least one record")
    match = match or _default_match
    hits = [bool(match(r)) for r in records]

    return AccuracyReport(
        overall=GroupAccuracy(sum(hits), len(records)),
        per_category=_tally(records, hits, lambda r: r.category),
        per_template=_tally(records, hits, lambda r: r.template),
        per_domain=_tally(records, hits, lambda r: r.domain.value),
    )


def dataset_average(per_dataset: Sequence[tuple[float, float]]) -> tuple[float, float]:
    if not per_dataset:
        raise EmptyInput("dataset_average needs at least one dataset")
    values = np.asarray(per_dataset, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != 2:
        raise LengthMismatch("expected (srcc, plcc) pairs")
    return float(values[:, 0].mean()), float(values[:, 1].mean())


def _quantize(value: float | Decimal, decimals: int) -> Decimal:
    exact = value if isinstance(value, Decimal) else Decimal(repr(float(value)))
    return exact.quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_HALF_EVEN)


def render_percent(value: float | Decimal, decimals: int = PERCENT_DECIMALS) -> str:
    """`value` is already a percentage (75.0 renders as "75.00%")."""
    return f"{_quantize(value, decimals)}%"


def render_correlation(value: float | None, decimals: int = CORRELATION_DECIMALS) -> str:
    if value is None:
        return ABSENT
    rendered = str(_quantize(value, decimals))
    # "-0.0000" reads as a sign error in tables
    return rendered.lstrip("-") if Decimal(rendered) == 0 else rendered
