import taxonomy
import annotation
import ista_score
import rewards
import grpo
import metrics
import curation
import leaderboard
import harness
import utils

__all__ = [
    "taxonomy",
    "annotation",
    "ista_score",
    "rewards",
    "grpo",
    "metrics",
    "curation",
    "leaderboard",
    "harness",
    "utils",
]
