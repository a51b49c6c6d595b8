"""
Tests for the answer, rating and token-as-score rewards.
"""

import math
import string
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

# Add app directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "app"))

from errors import (
    AllZeroProbabilities,
    DegenerateRange,
    InvalidConfig,
    InvalidProbabilities,
    LengthMismatch,
    ParseError,
    ScoreOutOfRange,
)
from rewards import (
    RatingPair,
    RewardConfig,
    canonicalize_answer,
    gaussian_soft_reward,
    level_logits_to_score,
    map_to_score_range,
    parse_rating_reply,
    resolve_option,
    threshold_reward,
    token_as_score,
    vqa_reward,
)

ANCHORS = [0.0, 25.0, 50.0, 75.0, 100.0]


@pytest.fixture
def rng():
    """Fixture providing a seeded generator."""
    return np.random.default_rng(7)


def test_vqa_reward_examples():
    """Exact, option-letter and mismatched answers."""
    assert vqa_reward("B", "B") == 1
    assert vqa_reward("(b) the sky region", "B") == 1
    assert vqa_reward("A", "B") == 0
    assert vqa_reward("Yes.", "yes") == 1
    assert vqa_reward("", "") == 0


def test_vqa_reward_with_options():
    """Full option text and the option letter match each other."""
    options = ["A. Blur", "B. Noise", "C. Compression"]
    assert vqa_reward("Noise", "B", options) == 1
    assert vqa_reward("b", "Noise", options) == 1
    assert vqa_reward("compression", "B", options) == 0
    assert resolve_option("C", options) == "c"
    assert resolve_option("Unlisted", options) == "unlisted"


@pytest.mark.parametrize(
    "raw, canonical",
    [
        ("(b) the sky region", "b"),
        ("B.", "b"),
        ("c)", "c"),
        (" d: glass ", "d"),
        ("Off-center!", "offcenter"),
        ("  Two   words ", "two words"),
    ],
)
def test_canonicalize_answer(raw, canonical):
    """Option letters are extracted; other answers lose punctuation."""
    assert canonicalize_answer(raw) == canonical


@given(st.text(alphabet=string.printable + "ÄéßＡ", max_size=40))
def test_canonicalize_idempotent(text):
    """Canonicalizing twice changes nothing."""
    once = canonicalize_answer(text)
    assert canonicalize_answer(once) == once


def test_gaussian_identical_scores():
    """Zero deviation is exactly 1 under any config."""
    assert gaussian_soft_reward(RatingPair(50, 50)) == 1.0
    assert gaussian_soft_reward(RatingPair(50, 50), RewardConfig(sigma0=3.0, alpha=0.0)) == 1.0


def test_gaussian_fixed_width():
    """With alpha 0 and d = sigma0 the reward is exp(-1/2)."""
    cfg = RewardConfig(sigma0=0.8, alpha=0.0)
    assert gaussian_soft_reward(RatingPair(50.8, 50.0), cfg) == pytest.approx(
        math.exp(-0.5), rel=1e-12
    )


def test_gaussian_sharpness_at_default_sigma():
    """A ten point miss at sigma0 0.8 is already below 1e-28."""
    cfg = RewardConfig(sigma0=0.8, alpha=1.0)
    value = gaussian_soft_reward(RatingPair(60, 50), cfg)
    assert value == pytest.approx(math.exp(-100 / (2 * 0.88**2)), rel=1e-12)
    assert 0 < value < 1e-28


def test_gaussian_alpha_zero_matches_direct(rng):
    """For alpha 0 the reward is the fixed-sigma Gaussian."""
    for _ in range(1000):
        p, g = rng.uniform(0, 100, size=2)
        sigma0 = float(rng.uniform(0.5, 20))
        d = abs(p - g)
        expected = math.exp(-(d * d) / (2 * sigma0 * sigma0))
        value = gaussian_soft_reward(RatingPair(p, g), RewardConfig(sigma0=sigma0, alpha=0.0))
        assert value == pytest.approx(expected, rel=1e-12, abs=0.0)


def test_gaussian_strictly_decreasing(rng):
    """Larger deviations always earn less while the reward is representable."""
    for _ in range(10_000):
        alpha = float(rng.uniform(0, 5))
        cfg = RewardConfig(sigma0=25.0, alpha=alpha)
        d1, d2 = sorted(rng.uniform(0.01, 100, size=2))
        if d1 == d2:
            continue
        r1 = gaussian_soft_reward(RatingPair(0, d1), cfg)
        r2 = gaussian_soft_reward(RatingPair(0, d2), cfg)
        assert 0 < r2 < r1 <= 1


def test_gaussian_invalid_sigma():
    """A non-positive sigma0 is rejected."""
    with pytest.raises(InvalidConfig):
        RewardConfig(sigma0=0.0)
    with pytest.raises(InvalidConfig):
        RewardConfig(alpha=-1.0)


def test_rating_pair_range():
    """Ratings must already lie on [0, 100]."""
    with pytest.raises(ScoreOutOfRange):
        RatingPair(101, 50)
    with pytest.raises(ScoreOutOfRange):
        RatingPair(50, -0.5)


def test_threshold_reward_examples():
    """The tolerance boundary is strict."""
    assert threshold_reward(RatingPair(50, 50.5), 1.0) == 1
    assert threshold_reward(RatingPair(50, 51), 1.0) == 0
    with pytest.raises(InvalidConfig):
        threshold_reward(RatingPair(50, 51), 0.0)


def test_threshold_matches_indicator(rng):
    """A random sweep agrees with the indicator of |p - g| < epsilon."""
    for _ in range(10_000):
        p, g = rng.uniform(0, 100, size=2)
        epsilon = float(rng.uniform(0.1, 30))
        assert threshold_reward(RatingPair(p, g), epsilon) == int(abs(p - g) < epsilon)


def test_threshold_consistent_with_gaussian(rng):
    """Inside the tolerance, the matched-width Gaussian exceeds one half."""
    for _ in range(1000):
        epsilon = float(rng.uniform(0.5, 20))
        p, g = rng.uniform(0, 100, size=2)
        pair = RatingPair(p, g)
        if threshold_reward(pair, epsilon):
            sigma0 = epsilon / math.sqrt(2 * math.log(2))
            assert gaussian_soft_reward(pair, RewardConfig(sigma0=sigma0, alpha=0.0)) > 0.5


def test_token_as_score_examples():
    """One-hot, uniform and symmetric distributions."""
    assert token_as_score([0, 0, 0, 0, 1], ANCHORS) == 100.0
    assert token_as_score([1, 1, 1, 1, 1], ANCHORS) == pytest.approx(50.0)
    assert token_as_score([0.1, 0.2, 0.4, 0.2, 0.1], ANCHORS) == pytest.approx(50.0)


def test_token_as_score_scale_invariant(rng):
    """Scaling the probability vector leaves the score unchanged."""
    for _ in range(200):
        probs = rng.uniform(0, 1, size=5)
        scale = float(rng.uniform(0.01, 100))
        assert token_as_score(probs * scale, ANCHORS) == pytest.approx(
            token_as_score(probs, ANCHORS), rel=1e-12
        )


def test_token_as_score_errors():
    """Shape and probability errors."""
    with pytest.raises(LengthMismatch):
        token_as_score([0.5, 0.5], ANCHORS)
    with pytest.raises(LengthMismatch):
        token_as_score([1.0], [50.0])
    with pytest.raises(AllZeroProbabilities):
        token_as_score([0, 0, 0, 0, 0], ANCHORS)
    with pytest.raises(InvalidProbabilities):
        token_as_score([0.5, -0.1, 0.2, 0.2, 0.2], ANCHORS)


def test_level_logits_to_score():
    """Equal logits give the uniform expectation."""
    assert level_logits_to_score([0.0] * 5, ANCHORS) == pytest.approx(50.0)
    assert level_logits_to_score([-50, -50, -50, -50, 50], ANCHORS) == pytest.approx(100.0)


def test_map_to_score_range():
    """Affine map onto [0, 100] with clamping."""
    assert map_to_score_range(5, 0, 10) == 50.0
    assert map_to_score_range(0, 0, 10) == 0.0
    assert map_to_score_range(12, 0, 10) == 100.0
    assert map_to_score_range(3, 1, 5) == 50.0
    with pytest.raises(DegenerateRange):
        map_to_score_range(3, 5, 5)


def test_parse_rating_reply():
    """Numbers are taken from replies or passed through."""
    assert parse_rating_reply(72) == 72.0
    assert parse_rating_reply("Score: 72.5") == 72.5
    assert parse_rating_reply("I would rate it 51") == 51.0
    with pytest.raises(ParseError):
        parse_rating_reply("excellent")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
