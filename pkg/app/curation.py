"""
Reject-sampling stage of benchmark construction.

A judger rates every candidate QA pair on four aspects using a five-point
scale; a candidate survives only if every aspect reaches the "good" cut.
"""

import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Protocol, Sequence

import numpy as np
import requests

from errors import (
    InvalidCandidate,
    InvalidConfig,
    JudgerUnavailable,
    MalformedJudgment,
    MissingScores,
    ParseError,
)
from perception_types import Domain, JudgerAspect
from rewards import resolve_option

SCALE_MIN: int = 1
SCALE_MAX: int = 5
# "good" on bad/poor/fair/good/excellent
DEFAULT_GOOD_THRESHOLD: int = 4
DEFAULT_RETRIES: int = 3
DEFAULT_RETRY_DELAY: float = 1.0
DEFAULT_MAX_IN_FLIGHT: int = 4
DEFAULT_HTTP_TIMEOUT: float = 30.0

ASPECTS: tuple[str, ...] = tuple(a.value for a in JudgerAspect)


def _check_threshold(threshold: int) -> int:
    if isinstance(threshold, bool) or not isinstance(threshold, (int, np.integer)):
        raise InvalidConfig(f"threshold must be an integer, got {threshold!r}", key="threshold")
    if not SCALE_MIN <= threshold <= SCALE_MAX:
        raise InvalidConfig(
            f"threshold must be in {SCALE_MIN}..{SCALE_MAX}, got {threshold}",
            key="threshold",
        )
    return int(threshold)


@dataclass(frozen=True)
class JudgerConfig:
    url: str | None = None
    timeout: float = DEFAULT_HTTP_TIMEOUT
    mock_seed: int | None = None
    model: str | None = None
    api_base: str | None = None
    token_env_file: str = ".env"

    def __post_init__(self):
        if not self.timeout > 0:
            raise InvalidConfig(f"timeout must be > 0, got {self.timeout}", key="judger.timeout")


@dataclass(frozen=True)
class CurationConfig:
    threshold: int = DEFAULT_GOOD_THRESHOLD
    retries: int = DEFAULT_RETRIES
    retry_delay: float = DEFAULT_RETRY_DELAY
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT
    judger: JudgerConfig = field(default_factory=JudgerConfig)

    def __post_init__(self):
        _check_threshold(self.threshold)
        if self.retries < 0:
            raise InvalidConfig(f"retries must be >= 0, got {self.retries}", key="retries")
        if self.retry_delay < 0:
            raise InvalidConfig(
                f"retry_delay must be >= 0, got {self.retry_delay}", key="retry_delay"
            )
        if self.max_in_flight < 1:
            raise InvalidConfig(
                f"max_in_flight must be >= 1, got {self.max_in_flight}",
                key="max_in_flight",
            )


@dataclass(frozen=True)
class CandidateQA:
    id: str
    domain: Domain
    category: str
    criterion: str
    question: str
    options: tuple[str, ...]
    gold: str
    rationale: str = ""

    def __post_init__(self):
        if not str(self.id).strip():
            raise InvalidCandidate("candidate id must be non-empty")
        try:
            object.__setattr__(self, "domain", Domain.parse(self.domain))
        except ValueError as exc:
            raise InvalidCandidate(str(exc), id=self.id) from None
        options = tuple(self.options)
        object.__setattr__(self, "options", options)
        if options:
            letters = {chr(ord("a") + i) for i in range(len(options))}
            if resolve_option(self.gold, options) not in letters:
                raise InvalidCandidate(
                    f"gold answer {self.gold!r} is not one of the options", id=self.id
                )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CandidateQA":
        missing = [k for k in ("id", "domain", "question", "gold") if k not in data]
        if missing:
            raise InvalidCandidate(
                f"candidate missing field(s): {', '.join(missing)}", id=data.get("id")
            )
        return cls(
            id=str(data["id"]),
            domain=data["domain"],
            category=str(data.get("category", "")),
            criterion=str(data.get("criterion", "")),
            question=str(data["question"]),
            options=tuple(str(o) for o in data.get("options") or ()),
            gold=str(data["gold"]),
            rationale=str(data.get("rationale", "")),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "domain": self.domain.value,
            "category": self.category,
            "criterion": self.criterion,
            "question": self.question,
            "options": list(self.options),
            "gold": self.gold,
            "rationale": self.rationale,
        }


@dataclass(frozen=True)
class JudgerScores:
    question_validity: int
    answer_validity: int
    reasoning_validity: int
    criterion_relevance: int

    def __post_init__(self):
        for aspect in ASPECTS:
            value = getattr(self, aspect)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise MalformedJudgment(
                    f"{aspect} must be an integer, got {value!r}", aspect=aspect
                )
            if not SCALE_MIN <= value <= SCALE_MAX:
                raise MalformedJudgment(
                    f"{aspect} score {value} outside {SCALE_MIN}..{SCALE_MAX}",
                    aspect=aspect,
                )
            object.__setattr__(self, aspect, int(value))

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "JudgerScores":
        missing = [a for a in ASPECTS if a not in data]
        if missing:
            raise MalformedJudgment(f"judgment missing aspect(s): {', '.join(missing)}")
        return cls(**{a: data[a] for a in ASPECTS})

    @classmethod
    def uniform(cls, value: int) -> "JudgerScores":
        return cls(value, value, value, value)

    @property
    def lowest(self) -> int:
        return min(self.as_tuple())

    def as_tuple(self) -> tuple[int, int, int, int]:
        return tuple(getattr(self, a) for a in ASPECTS)  # type: ignore[return-value]

    def to_dict(self) -> dict[str, int]:
        return {a: getattr(self, a) for a in ASPECTS}


class JudgerClient(Protocol):
    def score(self, candidate: CandidateQA) -> JudgerScores: ...


def scores_from_records(records: Iterable[Mapping[str, Any]]) -> dict[str, JudgerScores]:
    """Scores file rows {id, question_validity, ...} keyed by id."""
    scores: dict[str, JudgerScores] = {}
    for line, record in enumerate(records, start=1):
        record_id = record.get("id")
        if record_id is None:
            raise ParseError("scores record has no id", line=line)
        if str(record_id) in scores:
            raise ParseError(f"duplicate scores for {record_id}", id=record_id, line=line)
        try:
            scores[str(record_id)] = JudgerScores.from_mapping(record)
        except MalformedJudgment as exc:
            raise exc.with_context(id=record_id, line=line)
    return scores


def reject_sample(
    candidates: Sequence[CandidateQA],
    scores: Mapping[str, JudgerScores],
    good_threshold: int = DEFAULT_GOOD_THRESHOLD,
) -> tuple[list[CandidateQA], list[CandidateQA]]:
    threshold = _check_threshold(good_threshold)
    missing = [c.id for c in candidates if c.id not in scores]
    if missing:
        raise MissingScores(missing)

    retained: list[CandidateQA] = []
    rejected: list[CandidateQA] = []
    for candidate in candidates:
        if scores[candidate.id].lowest >= threshold:
            retained.append(candidate)
        else:
            rejected.append(candidate)
    return retained, rejected


def judge(
    candidate: CandidateQA,
    judger: JudgerClient,
    retries: int = DEFAULT_RETRIES,
    retry_delay: float = DEFAULT_RETRY_DELAY,
    logger: logging.Logger | None = None,
) -> JudgerScores:
    logger = logger or logging.getLogger(__name__)
    attempt = 0
    while True:
        try:
            return judger.score(candidate)
        except JudgerUnavailable as exc:
            if attempt >= retries:
                raise exc.with_context(id=candidate.id, attempts=attempt + 1)
            attempt += 1
            logger.warning(
                f"Judger unavailable for {candidate.id} ({exc.message}); "
                f"retry {attempt}/{retries}"
            )
            time.sleep(retry_delay)
        except MalformedJudgment as exc:
            raise exc.with_context(id=candidate.id)


def judge_all(
    candidates: Sequence[CandidateQA],
    judger: JudgerClient,
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    retries: int = DEFAULT_RETRIES,
    retry_delay: float = DEFAULT_RETRY_DELAY,
    logger: logging.Logger | None = None,
) -> list[JudgerScores]:
    """Scores in input order; at most `max_in_flight` requests run at once."""
    if max_in_flight < 1:
        raise InvalidConfig(
            f"max_in_flight must be >= 1, got {max_in_flight}", key="max_in_flight"
        )
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(
            pool.map(
                lambda c: judge(c, judger, retries, retry_delay, logger), candidates
            )
        )


class MockJudger:
    """
    Offline judger. With `fixed` every candidate gets the same scores (which
    are validated on every call, so out-of-range values surface as
    MalformedJudgment). With `seed` each candidate gets uniform draws from
    the scale, reproducible per (seed, id) regardless of call order.
    """

    def __init__(
        self,
        logger: logging.Logger,
        fixed: Sequence[int] | None = None,
        seed: int | None = None,
    ):
        if (fixed is None) == (seed is None):
            raise InvalidConfig("MockJudger needs exactly one of fixed or seed")
        self.logger: logging.Logger = logger
        self.fixed: tuple[int, ...] | None = None if fixed is None else tuple(fixed)
        self.seed: int | None = seed

    def _rng(self, candidate_id: str) -> np.random.Generator:
        digest = hashlib.sha256(f"{self.seed}:{candidate_id}".encode("utf-8")).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "big"))

    def score(self, candidate: CandidateQA) -> JudgerScores:
        if self.fixed is not None:
            values = self.fixed
        else:
            values = tuple(
                int(v) for v in self._rng(candidate.id).integers(SCALE_MIN, SCALE_MAX + 1, size=4)
            )
        self.logger.debug(f"Mock judgment for {candidate.id}: {values}")
        if len(values) != len(ASPECTS):
            raise MalformedJudgment(f"expected {len(ASPECTS)} scores, got {len(values)}")
        return JudgerScores(*values)


class HttpJudger:
    """
    POSTs the candidate document as JSON to `url`. The response body is a JSON
    object holding the four aspect scores as integers, either at top level or
    under "scores":

        {"question_validity": 5, "answer_validity": 4,
         "reasoning_validity": 4, "criterion_relevance": 5}
    """

    def __init__(
        self,
        logger: logging.Logger,
        url: str,
        timeout: float = DEFAULT_HTTP_TIMEOUT,
        session: requests.Session | None = None,
    ):
        self.logger: logging.Logger = logger
        self.url: str = url
        self.timeout: float = timeout
        self.session: requests.Session = session or requests.Session()

    def score(self, candidate: CandidateQA) -> JudgerScores:
        payload = candidate.to_dict()
        self.logger.debug(f"POST {self.url} for {candidate.id}")
        try:
            response = self.session.post(
                self.url,
                json=payload,
                headers={"Content-Type": "application/json"},
                timeout=self.timeout,
            )
        except (requests.ConnectionError, requests.Timeout) as e:
            raise JudgerUnavailable(f"cannot reach judger: {e}", url=self.url) from e

        if response.status_code >= 500:
            raise JudgerUnavailable(
                f"judger returned HTTP {response.status_code}", url=self.url
            )
        if response.status_code >= 400:
            raise MalformedJudgment(
                f"judger rejected the candidate with HTTP {response.status_code}",
                url=self.url,
            )

        try:
            body = response.json()
        except ValueError as e:
            raise MalformedJudgment(f"judger reply is not JSON: {e}", url=self.url) from e
        if isinstance(body, dict) and isinstance(body.get("scores"), dict):
            body = body["scores"]
        if not isinstance(body, dict):
            raise MalformedJudgment("judger reply is not a JSON object", url=self.url)
        return JudgerScores.from_mapping(body)
