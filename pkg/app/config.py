"""
Run configuration. Values come from, in order of precedence, command-line
flags, a YAML config file (`--config`, else $PERCEPT_EVAL_CONFIG, else the
bundled default.yaml) and the dataclass defaults of each module.
"""

import copy
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from curation import CurationConfig, JudgerConfig
from errors import ConfigError, InvalidConfig, PerceptEvalError
from grpo import DEFAULT_FD_STEP, DEFAULT_GRAD_TOLERANCE, GrpoConfig
from leaderboard import LeaderboardConfig
from perception_types import RewardMode, ValidationMode
from rewards import RewardConfig

CONFIG_ENV_VAR: str = "PERCEPT_EVAL_CONFIG"
# override value that removes a key set by the config file
CLEAR: object = object()
DEFAULT_CONFIG_PATH: Path = Path(__file__).parent / "config" / "default.yaml"

# allowed keys per section; nested mappings list their own keys
CONFIG_SCHEMA: dict[str, Any] = {
    "logging": {"level"},
    "lexicon": {"path"},
    "validation": {"mode"},
    "workers": None,
    "reward": {"sigma0", "alpha", "epsilon", "mode", "score_range"},
    "grpo": {
        "clip_epsilon",
        "kl_beta",
        "advantage_std_floor",
        "reward_weight",
        "fd_step",
        "grad_tolerance",
    },
    "curation": {
        "threshold": None,
        "retries": None,
        "retry_delay": None,
        "max_in_flight": None,
        "judger": {"url", "timeout", "mock_seed", "model", "api_base", "token_env_file"},
    },
    "leaderboard": {"format", "metric", "decimals", "average"},
}


@dataclass(frozen=True)
class RunConfig:
    config_path: Path | None = None
    log_level: str = "INFO"
    lexicon_path: Path | None = None
    validation_mode: ValidationMode = ValidationMode.Strict
    workers: int = 1
    reward: RewardConfig = field(default_factory=RewardConfig)
    reward_mode: RewardMode = RewardMode.Gaussian
    score_range: tuple[float, float] | None = None
    grpo: GrpoConfig = field(default_factory=GrpoConfig)
    fd_step: float = DEFAULT_FD_STEP
    grad_tolerance: float = DEFAULT_GRAD_TOLERANCE
    curation: CurationConfig = field(default_factory=CurationConfig)
    leaderboard: LeaderboardConfig = field(default_factory=LeaderboardConfig)
    # subcommand inputs by flag name ("in", "pred", "gt", "reports", ...)
    inputs: dict[str, Path | tuple[Path, ...]] = field(default_factory=dict)
    output: Path | None = None
    # subcommand switches without a config-file counterpart
    options: dict[str, Any] = field(default_factory=dict)

    def input(self, name: str) -> Path:
        value = self.inputs.get(name)
        if value is None:
            raise ConfigError(f"missing required input --{name}", flag=name)
        if isinstance(value, tuple):
            raise ConfigError(f"--{name} takes a single path", flag=name)
        return value

    def require_output(self) -> Path:
        if self.output is None:
            raise ConfigError("missing required output path")
        return self.output


def resolve_config_path(flag: str | None) -> Path | None:
    if flag:
        return Path(flag)
    from_env = os.environ.get(CONFIG_ENV_VAR)
    if from_env:
        return Path(from_env)
    if DEFAULT_CONFIG_PATH.exists():
        return DEFAULT_CONFIG_PATH
    return None


def _check_keys(data: Mapping[str, Any], schema: Mapping[str, Any] | set, prefix: str) -> None:
    allowed = set(schema)
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        if key not in allowed:
            raise InvalidConfig(f"unknown config key '{dotted}'", key=dotted)
        nested = schema.get(key) if isinstance(schema, Mapping) else None
        if nested is not None:
            if not isinstance(value, Mapping):
                raise InvalidConfig(f"'{dotted}' must be a mapping", key=dotted)
            _check_keys(value, nested, f"{dotted}.")


def load_config_file(path: Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as file:
            data = yaml.safe_load(file)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", path=str(path)) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"Improper YAML config: {exc}", path=str(path)) from None

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping", path=str(path))
    _check_keys(data, CONFIG_SCHEMA, "")
    return data


def merge_overrides(data: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Apply dotted-key overrides ("reward.sigma0") on a copy. None leaves the
    key alone; CLEAR removes it."""
    merged = copy.deepcopy(dict(data))
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = merged
        *parents, leaf = dotted.split(".")
        for part in parents:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        if value is CLEAR:
            node.pop(leaf, None)
        else:
            node[leaf] = value
    return merged


def resolve_relative(candidate: str, config_path: Path | None) -> Path:
    candidate_path = Path(candidate)
    if candidate_path.is_absolute():
        return candidate_path

    cwd_resolved = candidate_path.resolve()
    if cwd_resolved.exists() or config_path is None:
        return cwd_resolved

    return (config_path.parent / candidate_path).resolve()


def _pick(section: Mapping[str, Any], key: str, default: Any, cast: Any) -> Any:
    value = section.get(key)
    if value is None:
        return default
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise InvalidConfig(f"invalid value {value!r} for '{key}'", key=key) from None


def build_run_config(
    data: Mapping[str, Any],
    config_path: Path | None = None,
    inputs: Mapping[str, Any] | None = None,
    output: str | Path | None = None,
    options: Mapping[str, Any] | None = None,
) -> RunConfig:
    logging_cfg = data.get("logging") or {}
    reward_cfg = data.get("reward") or {}
    grpo_cfg = data.get("grpo") or {}
    curation_cfg = data.get("curation") or {}
    judger_cfg = curation_cfg.get("judger") or {}
    leaderboard_cfg = data.get("leaderboard") or {}

    log_level = str(logging_cfg.get("level", "INFO")).upper()
    if log_level not in logging._nameToLevel:
        raise InvalidConfig(f"unknown logging level '{log_level}'", key="logging.level")

    lexicon_path = (data.get("lexicon") or {}).get("path")
    score_range = reward_cfg.get("score_range")
    if score_range is not None:
        if not isinstance(score_range, (list, tuple)) or len(score_range) != 2:
            raise InvalidConfig(
                "reward.score_range must be a [lo, hi] pair", key="reward.score_range"
            )
        try:
            score_range = (float(score_range[0]), float(score_range[1]))
        except (TypeError, ValueError):
            raise InvalidConfig(
                f"invalid reward.score_range {score_range!r}", key="reward.score_range"
            ) from None
        if not score_range[1] > score_range[0]:
            raise InvalidConfig(
                f"reward.score_range {list(score_range)} is empty", key="reward.score_range"
            )

    try:
        cfg = RunConfig(
            config_path=config_path,
            log_level=log_level,
            lexicon_path=(
                None if lexicon_path is None else resolve_relative(str(lexicon_path), config_path)
            ),
            validation_mode=_pick(
                data.get("validation") or {}, "mode", ValidationMode.Strict, ValidationMode
            ),
            workers=_pick(data, "workers", 1, int),
            reward=RewardConfig(
                sigma0=_pick(reward_cfg, "sigma0", RewardConfig.sigma0, float),
                alpha=_pick(reward_cfg, "alpha", RewardConfig.alpha, float),
                epsilon_threshold=_pick(
                    reward_cfg, "epsilon", RewardConfig.epsilon_threshold, float
                ),
            ),
            reward_mode=_pick(reward_cfg, "mode", RewardMode.Gaussian, RewardMode),
            score_range=score_range,
            grpo=GrpoConfig(
                clip_epsilon=_pick(grpo_cfg, "clip_epsilon", GrpoConfig.clip_epsilon, float),
                kl_beta=_pick(grpo_cfg, "kl_beta", GrpoConfig.kl_beta, float),
                advantage_std_floor=_pick(
                    grpo_cfg, "advantage_std_floor", GrpoConfig.advantage_std_floor, float
                ),
                apply_reward_weight=_pick(
                    grpo_cfg, "reward_weight", GrpoConfig.apply_reward_weight, bool
                ),
            ),
            fd_step=_pick(grpo_cfg, "fd_step", DEFAULT_FD_STEP, float),
            grad_tolerance=_pick(grpo_cfg, "grad_tolerance", DEFAULT_GRAD_TOLERANCE, float),
            curation=CurationConfig(
                threshold=_pick(curation_cfg, "threshold", CurationConfig.threshold, int),
                retries=_pick(curation_cfg, "retries", CurationConfig.retries, int),
                retry_delay=_pick(
                    curation_cfg, "retry_delay", CurationConfig.retry_delay, float
                ),
                max_in_flight=_pick(
                    curation_cfg, "max_in_flight", CurationConfig.max_in_flight, int
                ),
                judger=JudgerConfig(
                    url=_pick(judger_cfg, "url", None, str),
                    timeout=_pick(judger_cfg, "timeout", JudgerConfig.timeout, float),
                    mock_seed=_pick(judger_cfg, "mock_seed", None, int),
                    model=_pick(judger_cfg, "model", None, str),
                    api_base=_pick(judger_cfg, "api_base", None, str),
                    token_env_file=_pick(
                        judger_cfg, "token_env_file", JudgerConfig.token_env_file, str
                    ),
                ),
            ),
            leaderboard=LeaderboardConfig(
                format=_pick(leaderboard_cfg, "format", LeaderboardConfig.format, str),
                metric=_pick(leaderboard_cfg, "metric", LeaderboardConfig.metric, str),
                average=_pick(leaderboard_cfg, "average", LeaderboardConfig.average, bool),
                decimals=_pick(leaderboard_cfg, "decimals", None, int),
            ),
            inputs={
                name: (
                    tuple(Path(p) for p in value)
                    if isinstance(value, (list, tuple))
                    else Path(value)
                )
                for name, value in (inputs or {}).items()
                if value is not None and value != ()
            },
            output=None if output is None else Path(output),
            options=dict(options or {}),
        )
    except PerceptEvalError:
        raise
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(str(exc)) from None

    if cfg.workers < 1:
        raise InvalidConfig(f"workers must be >= 1, got {cfg.workers}", key="workers")
    return cfg


def check_paths(cfg: RunConfig) -> None:
    """Every referenced input must exist before any work starts."""
    paths: list[tuple[str, Path]] = []
    for name, value in cfg.inputs.items():
        if isinstance(value, tuple):
            paths.extend((name, p) for p in value)
        else:
            paths.append((name, value))
    if cfg.lexicon_path is not None:
        paths.append(("lexicon", cfg.lexicon_path))

    for name, path in paths:
        if not path.exists():
            raise ConfigError(f"input not found: {path}", flag=name, path=str(path))
