"""
Batch subcommands. Each body reads its inputs, runs the domain module and
returns the files to write plus a summary; `run` writes the files atomically
and turns module errors into a structured stderr message and exit status 1.
"""

import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence, TypeVar

from annotation import parse_annotation_batch, validate_annotation
from config import RunConfig, check_paths
from curation import (
    CandidateQA,
    HttpJudger,
    JudgerClient,
    MockJudger,
    judge_all,
    reject_sample,
    scores_from_records,
)
from errors import ConfigError, EmptyInput, ParseError, PerceptEvalError
from grpo import RolloutGroup, gradient_check, group_advantages, grpo_objective
from ista_score import score_image
from leaderboard import build_table, render_leaderboard
from metrics import (
    EvalRecord,
    VrSeries,
    accuracy_breakdown,
    combined_vr,
    plcc,
    render_correlation,
    srcc,
)
from perception_types import RewardMode
from rewards import (
    RatingPair,
    gaussian_soft_reward,
    map_to_score_range,
    parse_rating_reply,
    threshold_reward,
)
from taxonomy import Lexicon, default_lexicon, load_lexicon
from utils.os_utils import (
    atomic_write_many,
    dumps_document,
    dumps_jsonl,
    dumps_line,
    load_json,
    load_jsonl,
    read_bytes,
)

SUBCOMMANDS: tuple[str, ...] = (
    "ista-score",
    "eval-vr",
    "eval-vqa",
    "reward",
    "grpo-sim",
    "curate",
    "leaderboard",
)

USAGE: str = (
    "usage: percept-eval [--config PATH] [--log-level LEVEL] <subcommand> [options]\n"
    "subcommands: " + ", ".join(SUBCOMMANDS) + "\n"
)

REWARD_SIGNIFICANT_DIGITS: int = 6

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class Outcome:
    outputs: dict[Path, bytes] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)


def _fan_out(fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    # results come back in input order whatever the worker count
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _objects(path: Path) -> list[tuple[int, dict[str, Any]]]:
    rows = []
    for line, data in load_jsonl(path):
        if not isinstance(data, dict):
            raise ParseError("record is not a JSON object", path=str(path), line=line)
        rows.append((line, data))
    return rows


def _record_id(data: Any, line: int) -> str:
    if isinstance(data, dict) and data.get("id") is not None:
        return str(data["id"])
    return str(line)


def _lexicon(cfg: RunConfig) -> Lexicon:
    return load_lexicon(cfg.lexicon_path) if cfg.lexicon_path else default_lexicon()


def ista_score(cfg: RunConfig, logger: logging.Logger) -> Outcome:
    lexicon = _lexicon(cfg)
    records = parse_annotation_batch(read_bytes(cfg.input("in")))
    if not records:
        raise EmptyInput("no annotations in input", path=str(cfg.input("in")))

    def score_one(item: tuple[str, Any]) -> tuple[dict[str, Any], dict[str, Any]]:
        record_id, ann = item
        report = validate_annotation(ann, lexicon, cfg.validation_mode)
        for finding in report.warnings:
            logger.warning(f"{record_id}: {finding.path}: {finding.message}")
        # lexicon errors are reported, scoring still runs and weighs unknown terms 0
        for finding in report.errors:
            logger.warning(f"{record_id}: {finding.path}: {finding.message} (error)")
        try:
            scored = score_image(ann, lexicon).to_dict(record_id)
        except PerceptEvalError as exc:
            raise exc.with_context(id=record_id)
        return scored, {"id": record_id, **report.to_dict()}

    results = _fan_out(score_one, records, cfg.workers)
    outcome = Outcome()
    outcome.outputs[cfg.require_output()] = dumps_jsonl(r for r, _ in results)
    validation_out = cfg.options.get("validation_out")
    if validation_out:
        outcome.outputs[Path(validation_out)] = dumps_jsonl(v for _, v in results)
    invalid = [v["id"] for _, v in results if v["errors"]]
    outcome.summary = {
        "records": len(results),
        "validation_errors": sum(len(v["errors"]) for _, v in results),
        "records_with_errors": invalid,
    }
    if invalid:
        logger.warning(f"{len(invalid)} annotation(s) failed {cfg.validation_mode.value} validation")
    logger.info(f"Scored {len(results)} annotation(s)")
    return outcome


def _rating(value: Any, record_id: str, name: str) -> float:
    try:
        return parse_rating_reply(value)
    except ParseError as exc:
        raise exc.with_context(id=record_id, field=name)


def eval_vr(cfg: RunConfig, logger: logging.Logger) -> Outcome:
    predictions = _objects(cfg.input("pred"))
    truths: dict[str, float] = {}
    if cfg.inputs.get("gt") is not None:
        for line, data in _objects(cfg.input("gt")):
            record_id = _record_id(data, line)
            truths[record_id] = _rating(data.get("ground_truth"), record_id, "ground_truth")

    pred_values: list[float] = []
    gt_values: list[float] = []
    for line, data in predictions:
        record_id = _record_id(data, line)
        if "prediction" not in data:
            raise ParseError("record has no prediction", id=record_id, line=line)
        pred_values.append(_rating(data["prediction"], record_id, "prediction"))
        if "ground_truth" in data:
            gt_values.append(_rating(data["ground_truth"], record_id, "ground_truth"))
        elif record_id in truths:
            gt_values.append(truths[record_id])
        else:
            raise ParseError("no ground truth for record", id=record_id, line=line)

    try:
        series = VrSeries(pred_values, gt_values)
        srcc_value = srcc(series)
        plcc_value = plcc(series)
    except PerceptEvalError as exc:
        raise exc.with_context(path=str(cfg.input("pred")))
    combined = combined_vr(srcc_value, plcc_value)
    report = {
        "kind": "vr",
        "model": cfg.options.get("model") or "model",
        "dataset": cfg.options.get("dataset") or Path(cfg.input("pred")).stem,
        "n": len(series),
        "srcc": srcc_value,
        "plcc": plcc_value,
        "combined": combined,
        "display": {
            "srcc": render_correlation(srcc_value),
            "plcc": render_correlation(plcc_value),
            "combined": render_correlation(combined),
        },
    }
    logger.info(
        f"SRCC/PLCC {report['display']['srcc']}/{report['display']['plcc']} on {len(series)} items"
    )
    return Outcome(
        outputs={cfg.require_output(): dumps_document(report)},
        summary={"records": len(series), "srcc": srcc_value, "plcc": plcc_value},
    )


def eval_vqa(cfg: RunConfig, logger: logging.Logger) -> Outcome:
    records: list[EvalRecord] = []
    for line, data in _objects(cfg.input("records")):
        try:
            records.append(EvalRecord.from_dict(data))
        except PerceptEvalError as exc:
            raise exc.with_context(line=line)

    breakdown = accuracy_breakdown(records)
    report = {
        "kind": "vqa",
        "model": cfg.options.get("model") or "model",
        "dataset": cfg.options.get("dataset") or Path(cfg.input("records")).stem,
        **breakdown.to_dict(),
    }
    logger.info(f"Overall accuracy {breakdown.overall.to_dict()['display']}")
    return Outcome(
        outputs={cfg.require_output(): dumps_document(report)},
        summary={"records": len(records), "overall": breakdown.overall.accuracy},
    )


def _significant(value: float, digits: int = REWARD_SIGNIFICANT_DIGITS) -> float:
    return float(f"{value:.{digits}g}")


def reward(cfg: RunConfig, logger: logging.Logger) -> Outcome:
    rows = _objects(cfg.input("pairs"))

    def score_one(row: tuple[int, Any]) -> dict[str, Any]:
        line, data = row
        record_id = _record_id(data, line)
        try:
            pred = _rating(data.get("prediction"), record_id, "prediction")
            gold = _rating(data.get("ground_truth"), record_id, "ground_truth")
            if cfg.score_range is not None:
                lo, hi = cfg.score_range
                pred = map_to_score_range(pred, lo, hi)
                gold = map_to_score_range(gold, lo, hi)
            pair = RatingPair(pred, gold)
            if cfg.reward_mode == RewardMode.Threshold:
                value: float | int = threshold_reward(pair, cfg.reward.epsilon_threshold)
            else:
                value = _significant(gaussian_soft_reward(pair, cfg.reward))
        except PerceptEvalError as exc:
            raise exc.with_context(id=record_id, line=line)
        return {"id": record_id, "reward": value}

    results = _fan_out(score_one, rows, cfg.workers)
    logger.info(f"Scored {len(results)} rating pair(s) with {cfg.reward_mode.value} reward")
    return Outcome(
        outputs={cfg.require_output(): dumps_jsonl(results)},
        summary={"records": len(results), "mode": cfg.reward_mode.value},
    )


def grpo_sim(cfg: RunConfig, logger: logging.Logger) -> Outcome:
    grad_check = bool(cfg.options.get("grad_check"))
    results: list[dict[str, Any]] = []
    failed_checks = 0

    for line, data in _objects(cfg.input("groups")):
        record_id = _record_id(data, line)
        try:
            group = RolloutGroup.from_lists(
                data.get("rewards") or [],
                data.get("logp_new") or [],
                data.get("logp_old") or [],
            )
            objective = grpo_objective(group, cfg.grpo)
            if not math.isfinite(objective):
                logger.warning(f"{record_id}: objective is not finite (ratio overflow)")
            result: dict[str, Any] = {
                "id": record_id,
                "objective": objective if math.isfinite(objective) else None,
                "advantages": [
                    float(a) for a in group_advantages(group.rewards, cfg.grpo.advantage_std_floor)
                ],
            }
            if grad_check:
                check = gradient_check(group, cfg.grpo, cfg.fd_step, cfg.grad_tolerance)
                result["grad_check"] = check.to_dict()
                failed_checks += int(not check.passed)
        except PerceptEvalError as exc:
            raise exc.with_context(id=record_id, line=line)
        results.append(result)

    if failed_checks:
        logger.warning(f"{failed_checks} group(s) failed the gradient check")
    summary: dict[str, Any] = {"records": len(results)}
    if grad_check:
        summary["grad_check_failures"] = failed_checks
    return Outcome(outputs={cfg.require_output(): dumps_jsonl(results)}, summary=summary)


def _judger(cfg: RunConfig, logger: logging.Logger) -> JudgerClient | None:
    judger_cfg = cfg.curation.judger
    if judger_cfg.mock_seed is not None:
        return MockJudger(logger, seed=judger_cfg.mock_seed)
    if judger_cfg.url:
        return HttpJudger(logger, judger_cfg.url, judger_cfg.timeout)
    if judger_cfg.model:
        # litellm is only imported when an LLM judger is requested
        from llm_judger import LLMJudger

        return LLMJudger(
            logger,
            judger_cfg.token_env_file,
            model=judger_cfg.model,
            api_base=judger_cfg.api_base,
        )
    return None


def curate(cfg: RunConfig, logger: logging.Logger) -> Outcome:
    candidates: list[CandidateQA] = []
    for line, data in _objects(cfg.input("candidates")):
        try:
            candidates.append(CandidateQA.from_dict(data))
        except PerceptEvalError as exc:
            raise exc.with_context(line=line)

    out_dir = cfg.require_output()
    outcome = Outcome()

    if cfg.inputs.get("scores") is not None:
        scores = scores_from_records(data for _, data in _objects(cfg.input("scores")))
    else:
        judger = _judger(cfg, logger)
        if judger is None:
            raise ConfigError(
                "curate needs --scores, --judger-url, --judger-mock or --judger-model"
            )
        judged = judge_all(
            candidates,
            judger,
            max_in_flight=cfg.curation.max_in_flight,
            retries=cfg.curation.retries,
            retry_delay=cfg.curation.retry_delay,
            logger=logger,
        )
        scores = {c.id: s for c, s in zip(candidates, judged)}
        outcome.outputs[out_dir / "scores.jsonl"] = dumps_jsonl(
            {"id": c.id, **s.to_dict()} for c, s in zip(candidates, judged)
        )

    retained, rejected = reject_sample(candidates, scores, cfg.curation.threshold)
    fraction = len(retained) / len(candidates) if candidates else 0.0
    summary = {
        "candidates": len(candidates),
        "retained": len(retained),
        "rejected": len(rejected),
        "retained_fraction": fraction,
        "threshold": cfg.curation.threshold,
    }
    outcome.outputs[out_dir / "retained.jsonl"] = dumps_jsonl(c.to_dict() for c in retained)
    outcome.outputs[out_dir / "rejected.jsonl"] = dumps_jsonl(c.to_dict() for c in rejected)
    outcome.outputs[out_dir / "summary.json"] = dumps_document(summary)
    outcome.summary = summary
    logger.info(f"Retained {len(retained)}/{len(candidates)} candidate(s)")
    return outcome


def _report_paths(cfg: RunConfig) -> Iterable[Path]:
    value = cfg.inputs.get("reports")
    if value is None:
        raise ConfigError("leaderboard needs at least one --reports file", flag="reports")
    return value if isinstance(value, tuple) else (value,)


def leaderboard(cfg: RunConfig, logger: logging.Logger) -> Outcome:
    reports: list[dict[str, Any]] = []
    for path in _report_paths(cfg):
        report = load_json(path)
        if not isinstance(report, dict) or "model" not in report:
            raise ParseError("not an evaluation report", path=str(path))
        reports.append(report)

    table = build_table(reports, cfg.leaderboard)
    rendered = render_leaderboard(table, cfg.leaderboard.format)
    logger.info(f"Leaderboard with {len(table.rows)} row(s), {len(table.columns)} column(s)")
    return Outcome(
        outputs={cfg.require_output(): rendered},
        summary={"rows": len(table.rows), "columns": len(table.columns)},
    )


DISPATCH: dict[str, Callable[[RunConfig, logging.Logger], Outcome]] = {
    "ista-score": ista_score,
    "eval-vr": eval_vr,
    "eval-vqa": eval_vqa,
    "reward": reward,
    "grpo-sim": grpo_sim,
    "curate": curate,
    "leaderboard": leaderboard,
}


def _error_line(exc: PerceptEvalError) -> str:
    return json.dumps(exc.to_dict(), ensure_ascii=False, default=str)


def run(subcommand: str, cfg: RunConfig, logger: logging.Logger | None = None) -> int:
    logger = logger or logging.getLogger(__name__)
    body = DISPATCH.get(subcommand)
    if body is None:
        sys.stderr.write(f"unknown subcommand '{subcommand}'\n{USAGE}")
        return 2

    try:
        check_paths(cfg)
        outcome = body(cfg, logger)
        atomic_write_many(outcome.outputs)
    except PerceptEvalError as exc:
        logger.debug(f"{subcommand} failed: {exc}")
        sys.stderr.write(_error_line(exc) + "\n")
        return 1
    except (TypeError, KeyError, ValueError, AttributeError) as exc:
        # input shapes no body anticipated still end as a structured error
        logger.debug(f"{subcommand} failed on malformed input", exc_info=True)
        error = ParseError(
            f"malformed input: {type(exc).__name__}: {exc}", subcommand=subcommand
        )
        sys.stderr.write(_error_line(error) + "\n")
        return 1

    summary = {
        "status": "ok",
        "subcommand": subcommand,
        **outcome.summary,
        "outputs": sorted(str(p) for p in outcome.outputs),
    }
    sys.stdout.write(dumps_line(summary) + "\n")
    return 0
