import logging
import sys
from typing import Any

import click

import harness
from config import (
    CLEAR,
    CONFIG_ENV_VAR,
    build_run_config,
    load_config_file,
    merge_overrides,
    resolve_config_path,
)
from errors import PerceptEvalError
from perception_types import LeaderboardMetric, RewardMode, TableFormat, ValidationMode

QUIET_LOGGERS: tuple[str, ...] = ("LiteLLM", "httpx", "httpcore", "urllib3", "openai")


def configure_logging(level: str) -> logging.Logger:
    logging.basicConfig(level=logging._nameToLevel[level], stream=sys.stderr)
    # third-party loggers turned off completely.
    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.CRITICAL)
    return logging.getLogger()


def _choices(enum_type: Any) -> click.Choice:
    return click.Choice([m.value for m in enum_type])


def _execute(
    ctx: click.Context,
    subcommand: str,
    overrides: dict[str, Any],
    inputs: dict[str, Any],
    output: str | None,
    options: dict[str, Any] | None = None,
) -> None:
    root: dict[str, Any] = ctx.obj
    overrides = {"logging.level": root["log_level"], "workers": root["workers"], **overrides}
    try:
        config_path = resolve_config_path(root["config"])
        data = merge_overrides(load_config_file(config_path), overrides)
        cfg = build_run_config(data, config_path, inputs, output, options)
    except PerceptEvalError as exc:
        sys.stderr.write(harness._error_line(exc) + "\n")
        ctx.exit(1)

    logger = configure_logging(cfg.log_level)
    logger.debug(f"Loaded config from {cfg.config_path}")
    ctx.exit(harness.run(subcommand, cfg, logger))


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--config",
    envvar=CONFIG_ENV_VAR,
    default=None,
    help=f"YAML config file (default: ${CONFIG_ENV_VAR}, else app/config/default.yaml)",
)
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False),
    default=None,
    help="Overrides logging.level from the config file",
)
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Record-level workers")
@click.pass_context
def main(ctx: click.Context, config: str | None, log_level: str | None, workers: int | None):
    """Perceptual assessment toolkit: scoring, rewards, metrics and curation."""
    ctx.obj = {
        "config": config,
        "log_level": None if log_level is None else log_level.upper(),
        "workers": workers,
    }


@main.command("ista-score")
@click.option("--in", "in_path", required=True, help="Annotation JSON, JSON array or JSONL")
@click.option("--out", required=True, help="Output JSONL of scores")
@click.option("--lexicon", default=None, help="Lexicon override YAML")
@click.option("--mode", type=_choices(ValidationMode), default=None)
@click.option("--validation-out", default=None, help="Per-record validation reports JSONL")
@click.pass_context
def ista_score(ctx, in_path, out, lexicon, mode, validation_out):
    _execute(
        ctx,
        "ista-score",
        {"lexicon.path": lexicon, "validation.mode": mode},
        {"in": in_path},
        out,
        {"validation_out": validation_out},
    )


@main.command("eval-vr")
@click.option("--pred", required=True, help="JSONL {id, prediction[, ground_truth]}")
@click.option("--gt", default=None, help="JSONL {id, ground_truth}, joined on id")
@click.option("--out", required=True, help="Output report JSON")
@click.option("--model", default=None, help="Model name recorded in the report")
@click.option("--dataset", default=None, help="Dataset name (default: prediction file stem)")
@click.pass_context
def eval_vr(ctx, pred, gt, out, model, dataset):
    _execute(ctx, "eval-vr", {}, {"pred": pred, "gt": gt}, out, {"model": model, "dataset": dataset})


@main.command("eval-vqa")
@click.option("--records", required=True, help="JSONL of evaluation records")
@click.option("--out", required=True, help="Output report JSON")
@click.option("--model", default=None)
@click.option("--dataset", default=None)
@click.pass_context
def eval_vqa(ctx, records, out, model, dataset):
    _execute(ctx, "eval-vqa", {}, {"records": records}, out, {"model": model, "dataset": dataset})


@main.command("reward")
@click.option("--pairs", required=True, help="JSONL {id, prediction, ground_truth}")
@click.option("--mode", type=_choices(RewardMode), default=None)
@click.option("--sigma0", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--epsilon", type=float, default=None)
@click.option(
    "--score-range",
    type=(float, float),
    default=None,
    help="Raw score range LO HI mapped onto [0, 100]",
)
@click.option("--out", required=True)
@click.pass_context
def reward(ctx, pairs, mode, sigma0, alpha, epsilon, score_range, out):
    _execute(
        ctx,
        "reward",
        {
            "reward.mode": mode,
            "reward.sigma0": sigma0,
            "reward.alpha": alpha,
            "reward.epsilon": epsilon,
            "reward.score_range": None if score_range is None else list(score_range),
        },
        {"pairs": pairs},
        out,
    )


@main.command("grpo-sim")
@click.option("--groups", required=True, help="JSONL {id, rewards, logp_new, logp_old}")
@click.option("--clip-epsilon", type=float, default=None)
@click.option("--kl-beta", type=float, default=None)
@click.option("--reward-weight/--no-reward-weight", default=None)
@click.option("--grad-check", is_flag=True, default=False)
@click.option("--out", required=True)
@click.pass_context
def grpo_sim(ctx, groups, clip_epsilon, kl_beta, reward_weight, grad_check, out):
    _execute(
        ctx,
        "grpo-sim",
        {
            "grpo.clip_epsilon": clip_epsilon,
            "grpo.kl_beta": kl_beta,
            "grpo.reward_weight": reward_weight,
        },
        {"groups": groups},
        out,
        {"grad_check": grad_check},
    )


@main.command("curate")
@click.option("--candidates", required=True, help="JSONL of candidate QA pairs")
@click.option("--scores", default=None, help="JSONL of judger scores keyed by id")
@click.option("--judger-url", default=None, help="HTTP judger endpoint")
@click.option("--judger-mock", type=int, default=None, metavar="SEED", help="Seeded mock judger")
@click.option("--judger-model", default=None, help="LLM judger model (litellm name)")
@click.option("--threshold", type=int, default=None, help="Minimum score on every aspect")
@click.option("--out-dir", required=True)
@click.pass_context
def curate(ctx, candidates, scores, judger_url, judger_mock, judger_model, threshold, out_dir):
    chosen = [s for s in (scores, judger_url, judger_mock, judger_model) if s is not None]
    if len(chosen) > 1:
        raise click.UsageError(
            "use only one of --scores, --judger-url, --judger-mock, --judger-model"
        )
    overrides: dict[str, Any] = {
        "curation.threshold": threshold,
        "curation.max_in_flight": ctx.obj["workers"],
    }
    # an explicit judger flag replaces any judger configured in the file
    if judger_url is not None or judger_mock is not None or judger_model is not None:
        overrides.update(
            {
                "curation.judger.url": CLEAR if judger_url is None else judger_url,
                "curation.judger.mock_seed": CLEAR if judger_mock is None else judger_mock,
                "curation.judger.model": CLEAR if judger_model is None else judger_model,
            }
        )
    _execute(ctx, "curate", overrides, {"candidates": candidates, "scores": scores}, out_dir)


@main.command("leaderboard")
@click.option("--reports", required=True, multiple=True, help="Report JSON (repeatable)")
@click.option("--format", "fmt", type=_choices(TableFormat), default=None)
@click.option("--metric", type=_choices(LeaderboardMetric), default=None)
@click.option("--average/--no-average", default=None, help="Append the Avg. column")
@click.option("--out", required=True)
@click.pass_context
def leaderboard(ctx, reports, fmt, metric, average, out):
    _execute(
        ctx,
        "leaderboard",
        {"leaderboard.format": fmt, "leaderboard.metric": metric, "leaderboard.average": average},
        {"reports": tuple(reports)},
        out,
    )


if __name__ == "__main__":
    main()
