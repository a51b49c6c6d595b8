import math
import re
import string
import unicodedata
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import softmax

from errors import (
    AllZeroProbabilities,
    DegenerateRange,
    InvalidConfig,
    InvalidProbabilities,
    LengthMismatch,
    ParseError,
    ScoreOutOfRange,
)

SCORE_MIN: float = 0.0
SCORE_MAX: float = 100.0

DEFAULT_SIGMA0: float = 0.8
# never stated alongside the equation; configurable
DEFAULT_ALPHA: float = 1.0
DEFAULT_EPSILON: float = 1.0

DEFAULT_LEVEL_TOKENS: tuple[str, ...] = ("bad", "poor", "fair", "good", "excellent")
DEFAULT_ANCHORS: tuple[float, ...] = (0.0, 25.0, 50.0, 75.0, 100.0)

_OPTION_LETTER = re.compile(r"^\(?([a-z])(?:\)|\.|:|$)")
_OPTION_LABEL = re.compile(r"^\s*\(?[A-Za-z][).:]\s+")
_PUNCTUATION = str.maketrans("", "", string.punctuation)
_NUMBER = re.compile(r"[-+]?\d+(?:\.\d+)?")


@dataclass(frozen=True)
class RewardConfig:
    sigma0: float = DEFAULT_SIGMA0
    alpha: float = DEFAULT_ALPHA
    epsilon_threshold: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise InvalidConfig(f"sigma0 must be > 0, got {self.sigma0}", key="sigma0")
        if not self.alpha >= 0:
            raise InvalidConfig(f"alpha must be >= 0, got {self.alpha}", key="alpha")
        if not self.epsilon_threshold > 0:
            raise InvalidConfig(
                f"epsilon_threshold must be > 0, got {self.epsilon_threshold}",
                key="epsilon",
            )


@dataclass(frozen=True)
class RatingPair:
    prediction: float
    ground_truth: float

    def __post_init__(self):
        for name in ("prediction", "ground_truth"):
            value = float(getattr(self, name))
            if not SCORE_MIN <= value <= SCORE_MAX:
                raise ScoreOutOfRange(
                    f"{name} {value} outside [{SCORE_MIN:g}, {SCORE_MAX:g}]", field=name
                )
            object.__setattr__(self, name, value)

    @property
    def deviation(self) -> float:
        return abs(self.prediction - self.ground_truth)


def canonicalize_answer(text: str) -> str:
    """
    Canonical form for answer matching: NFKC, trimmed, case-folded. A leading
    option letter such as "(b)", "b)", "b." or a bare "b" reduces to the
    letter; anything else loses its punctuation and extra whitespace.
    """
    cleaned = unicodedata.normalize("NFKC", str(text)).strip().casefold()
    match = _OPTION_LETTER.match(cleaned)
    if match:
        return match.group(1)
    return " ".join(cleaned.translate(_PUNCTUATION).split())


def _strip_option_label(option: str) -> str:
    return _OPTION_LABEL.sub("", option, count=1)


def resolve_option(answer: str, options: Sequence[str]) -> str:
    """Letter of the option `answer` names, else its canonical form."""
    canonical = canonicalize_answer(answer)
    for index, option in enumerate(options):
        if canonical == canonicalize_answer(_strip_option_label(option)):
            return chr(ord("a") + index)
    return canonical


def vqa_reward(
    predicted_answer: str, gold_answer: str, options: Sequence[str] = ()
) -> int:
    """1 when the canonical answers match, else 0.

    With `options` (in A, B, C... order) the full option text of either answer
    is mapped to its letter before comparing.
    """
    predicted = canonicalize_answer(predicted_answer)
    gold = canonicalize_answer(gold_answer)
    if options:
        predicted = resolve_option(predicted_answer, options)
        gold = resolve_option(gold_answer, options)
    return int(bool(predicted) and predicted == gold)


def gaussian_soft_reward(pair: RatingPair, cfg: RewardConfig | None = None) -> float:
    """
    exp(-d^2 / (2 sigma_dyn^2)) with d = |p - g| and
    sigma_dyn = sigma0 * (1 + alpha * d / 100).

    At the default sigma0 of 0.8 the reward is close to binary on the 0-100
    scale and underflows to 0.0 for deviations beyond roughly 30 points.
    """
    cfg = cfg or RewardConfig()
    if not cfg.sigma0 > 0:
        raise InvalidConfig(f"sigma0 must be > 0, got {cfg.sigma0}", key="sigma0")
    d = pair.deviation
    if d == 0:
        return 1.0
    sigma_dyn = cfg.sigma0 * (1.0 + cfg.alpha * d / SCORE_MAX)
    return math.exp(-(d * d) / (2.0 * sigma_dyn * sigma_dyn))


def threshold_reward(pair: RatingPair, epsilon: float) -> int:
    if not epsilon > 0:
        raise InvalidConfig(f"epsilon must be > 0, got {epsilon}", key="epsilon")
    return int(pair.deviation < epsilon)


def token_as_score(
    level_probabilities: Sequence[float], anchors: Sequence[float] = DEFAULT_ANCHORS
) -> float:
    """Expected anchor value under the renormalized level-token distribution."""
    probs = np.asarray(level_probabilities, dtype=np.float64)
    values = np.asarray(anchors, dtype=np.float64)
    if probs.ndim != 1 or values.ndim != 1 or probs.shape != values.shape:
        raise LengthMismatch(
            f"{probs.size} probabilities for {values.size} anchors"
        )
    if probs.size < 2:
        raise LengthMismatch("token_as_score needs at least two levels")
    if not np.all(np.isfinite(probs)) or np.any(probs < 0):
        raise InvalidProbabilities("level probabilities must be finite and non-negative")
    total = probs.sum()
    if total <= 0:
        raise AllZeroProbabilities("level probabilities sum to zero")
    score = float(np.dot(probs, values) / total)
    # guard against rounding past the anchor range
    return float(np.clip(score, values.min(), values.max()))


def level_logits_to_score(
    logits: Sequence[float], anchors: Sequence[float] = DEFAULT_ANCHORS
) -> float:
    """Softmax over level-token logits, then token_as_score."""
    values = np.asarray(logits, dtype=np.float64)
    if values.shape != np.asarray(anchors).shape:
        raise LengthMismatch(f"{values.size} logits for {len(anchors)} anchors")
    return token_as_score(softmax(values), anchors)


def map_to_score_range(raw: float, lo: float, hi: float) -> float:
    if not hi > lo:
        raise DegenerateRange(f"score range [{lo}, {hi}] is empty", lo=lo, hi=hi)
    mapped = SCORE_MAX * (float(raw) - lo) / (hi - lo)
    return min(max(mapped, SCORE_MIN), SCORE_MAX)


def parse_rating_reply(reply: str | float | int) -> float:
    """Numeric rating from a visual-rating reply such as "Score: 72"."""
    if isinstance(reply, (int, float)) and not isinstance(reply, bool):
        return float(reply)
    match = _NUMBER.search(str(reply))
    if match is None:
        raise ParseError(f"no numeric rating in reply {str(reply)[:40]!r}")
    return float(match.group(0))
