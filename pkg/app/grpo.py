"""
Group-relative clipped policy objective evaluated on small rollout groups.

objective = 1/sum|o_i| * sum_i sum_t [r_i] * min(ratio_t^i * A_i,
                                                 clip(ratio_t^i, 1-eps, 1+eps) * A_i)
            - beta * mean_t KL_t

The leading r_i weight is applied when `apply_reward_weight` is set; the KL
penalty uses the per-token estimator exp(d) - d - 1 with d = logp_old - logp_new.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from errors import GroupTooSmall, InvalidConfig, InvalidRollout, LengthMismatch, ParseError

logger = logging.getLogger(__name__)

MIN_GROUP_SIZE: int = 2
DEFAULT_CLIP_EPSILON: float = 0.2
DEFAULT_KL_BETA: float = 0.0
DEFAULT_STD_FLOOR: float = 1e-14
DEFAULT_FD_STEP: float = 1e-6
DEFAULT_GRAD_TOLERANCE: float = 1e-5


@dataclass(frozen=True)
class GrpoConfig:
    clip_epsilon: float = DEFAULT_CLIP_EPSILON
    kl_beta: float = DEFAULT_KL_BETA
    advantage_std_floor: float = DEFAULT_STD_FLOOR
    apply_reward_weight: bool = True

    def __post_init__(self):
        if not 0 < self.clip_epsilon < 1:
            raise InvalidConfig(
                f"clip_epsilon must be in (0, 1), got {self.clip_epsilon}",
                key="clip_epsilon",
            )
        if not self.kl_beta >= 0:
            raise InvalidConfig(
                f"kl_beta must be >= 0, got {self.kl_beta}", key="kl_beta"
            )
        if not self.advantage_std_floor > 0:
            raise InvalidConfig(
                f"advantage_std_floor must be > 0, got {self.advantage_std_floor}",
                key="advantage_std_floor",
            )


@dataclass(frozen=True)
class Rollout:
    token_logprob_new: np.ndarray
    token_logprob_old: np.ndarray
    reward: float

    def __post_init__(self):
        try:
            new = np.asarray(self.token_logprob_new, dtype=np.float64)
            old = np.asarray(self.token_logprob_old, dtype=np.float64)
            reward = float(self.reward)
        except (TypeError, ValueError) as exc:
            raise InvalidRollout(f"rollout values must be numbers: {exc}") from None
        if new.ndim != 1 or old.ndim != 1 or new.shape != old.shape:
            raise LengthMismatch(
                f"{new.size} new log-probs vs {old.size} old log-probs"
            )
        if new.size == 0:
            raise InvalidRollout("rollout has no tokens")
        if not (np.all(np.isfinite(new)) and np.all(np.isfinite(old))):
            raise InvalidRollout("log-probs must be finite")
        if np.any(new > 0) or np.any(old > 0):
            raise InvalidRollout("log-probs must be <= 0")
        if not math.isfinite(reward):
            raise InvalidRollout("reward must be finite")
        object.__setattr__(self, "token_logprob_new", new)
        object.__setattr__(self, "token_logprob_old", old)
        object.__setattr__(self, "reward", reward)

    def __len__(self) -> int:
        return int(self.token_logprob_new.size)

    def with_logprob_new(self, logprob_new: np.ndarray) -> "Rollout":
        return Rollout(logprob_new, self.token_logprob_old, self.reward)


@dataclass(frozen=True)
class RolloutGroup:
    rollouts: tuple[Rollout, ...]

    def __post_init__(self):
        rollouts = tuple(self.rollouts)
        if len(rollouts) < MIN_GROUP_SIZE:
            raise GroupTooSmall(
                f"group has {len(rollouts)} rollout(s); need at least {MIN_GROUP_SIZE}"
            )
        object.__setattr__(self, "rollouts", rollouts)

    @classmethod
    def from_lists(
        cls,
        rewards: Sequence[float],
        logp_new: Sequence[Sequence[float]],
        logp_old: Sequence[Sequence[float]],
    ) -> "RolloutGroup":
        for name, value in (("rewards", rewards), ("logp_new", logp_new), ("logp_old", logp_old)):
            if not isinstance(value, (list, tuple, np.ndarray)):
                raise ParseError(
                    f"{name} must be a list, got {type(value).__name__}", field=name
                )
        if not len(rewards) == len(logp_new) == len(logp_old):
            raise LengthMismatch(
                f"{len(rewards)} rewards, {len(logp_new)} new and "
                f"{len(logp_old)} old log-prob sequences"
            )
        rollouts = []
        for index, (reward, new, old) in enumerate(zip(rewards, logp_new, logp_old)):
            try:
                rollouts.append(Rollout(new, old, reward))
            except (LengthMismatch, InvalidRollout) as exc:
                raise exc.with_context(rollout=index)
        return cls(tuple(rollouts))

    @property
    def rewards(self) -> np.ndarray:
        return np.array([r.reward for r in self.rollouts], dtype=np.float64)

    @property
    def total_tokens(self) -> int:
        return sum(len(r) for r in self.rollouts)


@dataclass(frozen=True)
class GradCheckReport:
    max_abs_error: float
    max_rel_error: float
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_abs_error": self.max_abs_error,
            "max_rel_error": self.max_rel_error,
            "passed": self.passed,
        }


def group_advantages(
    rewards: Sequence[float], std_floor: float = DEFAULT_STD_FLOOR
) -> np.ndarray:
    """(r - mean) / (population std + floor); constant rewards give zeros."""
    values = np.asarray(rewards, dtype=np.float64)
    if values.size < MIN_GROUP_SIZE:
        raise GroupTooSmall(
            f"need at least {MIN_GROUP_SIZE} rewards, got {values.size}"
        )
    if np.all(values == values[0]):
        return np.zeros_like(values)
    return (values - values.mean()) / (values.std(ddof=0) + std_floor)


def policy_ratio(logp_new: float, logp_old: float) -> float:
    try:
        return math.exp(logp_new - logp_old)
    except OverflowError:
        logger.warning(
            "Policy ratio overflow (logp_new=%s, logp_old=%s); saturating to inf",
            logp_new,
            logp_old,
        )
        return math.inf


def clipped_term(ratio: float, advantage: float, clip_epsilon: float) -> float:
    if advantage == 0:
        return 0.0
    clipped = min(max(ratio, 1.0 - clip_epsilon), 1.0 + clip_epsilon)
    return min(ratio * advantage, clipped * advantage)


def _token_ratios(rollout: Rollout) -> np.ndarray:
    with np.errstate(over="ignore"):
        ratio = np.exp(rollout.token_logprob_new - rollout.token_logprob_old)
    overflowed = int(np.count_nonzero(np.isinf(ratio)))
    if overflowed:
        logger.warning("%d token ratio(s) overflowed to inf", overflowed)
    return ratio


def _kl_estimate(rollout: Rollout) -> np.ndarray:
    delta = rollout.token_logprob_old - rollout.token_logprob_new
    return np.expm1(delta) - delta


def _per_token_terms(
    group: RolloutGroup, cfg: GrpoConfig
) -> list[tuple[float, float, np.ndarray, np.ndarray]]:
    advantages = group_advantages(group.rewards, cfg.advantage_std_floor)
    out = []
    for rollout, advantage in zip(group.rollouts, advantages):
        weight = rollout.reward if cfg.apply_reward_weight else 1.0
        ratio = _token_ratios(rollout)
        out.append((weight, float(advantage), ratio, _kl_estimate(rollout)))
    return out


def grpo_objective(group: RolloutGroup, cfg: GrpoConfig | None = None) -> float:
    cfg = cfg or GrpoConfig()
    total_tokens = group.total_tokens
    surrogate = 0.0
    kl = 0.0

    for weight, advantage, ratio, kl_terms in _per_token_terms(group, cfg):
        if advantage != 0 and weight != 0:
            clipped = np.clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon)
            terms = np.minimum(ratio * advantage, clipped * advantage)
            surrogate += weight * float(terms.sum())
        kl += float(kl_terms.sum())

    objective = surrogate / total_tokens
    if cfg.kl_beta > 0:
        objective -= cfg.kl_beta * kl / total_tokens
    return objective


def grpo_gradient(group: RolloutGroup, cfg: GrpoConfig | None = None) -> list[np.ndarray]:
    """
    d objective / d logp_new per token. Tokens where the clipped branch is the
    minimum get zero surrogate gradient; ties go to the unclipped branch.
    """
    cfg = cfg or GrpoConfig()
    total_tokens = group.total_tokens
    gradients: list[np.ndarray] = []

    for weight, advantage, ratio, _ in _per_token_terms(group, cfg):
        grad = np.zeros_like(ratio)
        if advantage != 0 and weight != 0:
            clipped = np.clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon)
            unclipped_active = ratio * advantage <= clipped * advantage
            grad = np.where(unclipped_active, weight * advantage * ratio, 0.0)
        if cfg.kl_beta > 0:
            # d/dlogp_new of -(exp(d) - d - 1), d = old - new
            grad = grad + cfg.kl_beta * (1.0 / ratio - 1.0)
        gradients.append(grad / total_tokens)

    return gradients


def _shifted_objective(
    rollouts: list[Rollout], i: int, t: int, delta: float, cfg: GrpoConfig
) -> float:
    logp = rollouts[i].token_logprob_new.copy()
    logp[t] += delta
    shifted = rollouts[:i] + [rollouts[i].with_logprob_new(logp)] + rollouts[i + 1 :]
    return grpo_objective(RolloutGroup(tuple(shifted)), cfg)


def finite_difference_gradient(
    group: RolloutGroup, cfg: GrpoConfig | None = None, step: float = DEFAULT_FD_STEP
) -> list[np.ndarray]:
    """
    Central differences, except where logp + step would leave the log-prob
    domain: there a second-order backward difference stays at or below 0.
    """
    cfg = cfg or GrpoConfig()
    rollouts = list(group.rollouts)
    gradients: list[np.ndarray] = []

    for i, rollout in enumerate(rollouts):
        grad = np.zeros(len(rollout), dtype=np.float64)
        for t in range(len(rollout)):
            if rollout.token_logprob_new[t] + step <= 0.0:
                forward = _shifted_objective(rollouts, i, t, step, cfg)
                backward = _shifted_objective(rollouts, i, t, -step, cfg)
                grad[t] = (forward - backward) / (2.0 * step)
            else:
                here = _shifted_objective(rollouts, i, t, 0.0, cfg)
                one_back = _shifted_objective(rollouts, i, t, -step, cfg)
                two_back = _shifted_objective(rollouts, i, t, -2.0 * step, cfg)
                grad[t] = (3.0 * here - 4.0 * one_back + two_back) / (2.0 * step)
        gradients.append(grad)

    return gradients


def gradient_check(
    group: RolloutGroup,
    cfg: GrpoConfig | None = None,
    step: float = DEFAULT_FD_STEP,
    tolerance: float = DEFAULT_GRAD_TOLERANCE,
) -> GradCheckReport:
    analytic = np.concatenate(grpo_gradient(group, cfg))
    numeric = np.concatenate(finite_difference_gradient(group, cfg, step))
    max_abs = float(np.max(np.abs(analytic - numeric)))
    # normwise: relative to the largest gradient entry, so near-zero tokens
    # do not amplify finite-difference round-off
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))))
    max_rel = max_abs / scale if scale > 0 else 0.0
    return GradCheckReport(
        max_abs_error=max_abs,
        max_rel_error=max_rel,
        passed=max_rel < tolerance,
    )
