"""
Tests for the HTTP and LLM judger clients against a local mock endpoint.
"""

import json
import logging
import sys
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path
from types import SimpleNamespace

import litellm
import pytest

# Add app directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "app"))

from curation import CandidateQA, HttpJudger, JudgerScores, judge
from errors import JudgerUnavailable, MalformedJudgment
import llm_judger
from llm_judger import LLMJudger, parse_judgment

GOOD_REPLY = {
    "question_validity": 5,
    "answer_validity": 4,
    "reasoning_validity": 4,
    "criterion_relevance": 5,
}


class MockServer:
    """Simple mock judger that replays scripted (status, body) responses."""

    def __init__(self, responses, host="127.0.0.1", port=0):
        self.responses = list(responses)
        self.received_messages = []
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                server.received_messages.append(json.loads(self.rfile.read(length)))
                status, body = server.responses.pop(0) if server.responses else (500, "")
                payload = body if isinstance(body, str) else json.dumps(body)
                data = payload.encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, format, *args):
                pass

        self.httpd = HTTPServer((host, port), Handler)
        self.host, self.port = self.httpd.server_address[:2]
        self.thread = None

    @property
    def url(self):
        return f"http://{self.host}:{self.port}/judge"

    def start(self):
        """Start server in background thread."""
        self.thread = threading.Thread(target=self.httpd.serve_forever)
        self.thread.daemon = True
        self.thread.start()

    def stop(self):
        """Stop server and close socket."""
        self.httpd.shutdown()
        if self.thread:
            self.thread.join(timeout=1)
        self.httpd.server_close()


@pytest.fixture
def serve():
    """Fixture starting a mock judger with scripted responses."""
    servers = []

    def start(*responses):
        server = MockServer(responses)
        server.start()
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.stop()


@pytest.fixture
def logger():
    """Fixture providing a logger."""
    logging.basicConfig(level=logging.INFO)
    return logging.getLogger("test")


@pytest.fixture
def candidate():
    """Fixture providing a candidate QA pair."""
    return CandidateQA(
        id="c1",
        domain="ISTA",
        category="Material Representation",
        criterion="Material Identification",
        question="Which material covers the facade?",
        options=("Glass", "Brick"),
        gold="Glass",
        rationale="Specular highlights.",
    )


def test_http_judger_success(serve, logger, candidate):
    """A 200 reply with the four aspects parses into scores."""
    server = serve((200, GOOD_REPLY))
    scores = HttpJudger(logger, server.url, timeout=5).score(candidate)
    assert scores == JudgerScores(5, 4, 4, 5)

    # the candidate document is what gets posted
    assert server.received_messages[0]["id"] == "c1"
    assert server.received_messages[0]["options"] == ["Glass", "Brick"]


def test_http_judger_nested_scores(serve, logger, candidate):
    """Scores may be wrapped in a "scores" object."""
    server = serve((200, {"scores": GOOD_REPLY, "model": "judge-1"}))
    assert HttpJudger(logger, server.url).score(candidate).lowest == 4


def test_http_judger_retries_server_errors(serve, logger, candidate):
    """A 503 is retried and the following 200 is used."""
    server = serve((503, ""), (200, GOOD_REPLY))
    judger = HttpJudger(logger, server.url, timeout=5)
    scores = judge(candidate, judger, retries=2, retry_delay=0.0, logger=logger)
    assert scores.question_validity == 5
    assert len(server.received_messages) == 2


def test_http_judger_server_error_exhausts(serve, logger, candidate):
    """Persistent 500s end in JudgerUnavailable."""
    server = serve((500, ""), (500, ""))
    with pytest.raises(JudgerUnavailable) as exc_info:
        judge(candidate, HttpJudger(logger, server.url), retries=1, retry_delay=0.0, logger=logger)
    assert exc_info.value.context["id"] == "c1"


def test_http_judger_client_error(serve, logger, candidate):
    """A 4xx rejection is malformed and not retried."""
    server = serve((422, {"detail": "bad candidate"}), (200, GOOD_REPLY))
    with pytest.raises(MalformedJudgment):
        judge(candidate, HttpJudger(logger, server.url), retries=3, retry_delay=0.0, logger=logger)
    assert len(server.received_messages) == 1


def test_http_judger_bad_body(serve, logger, candidate):
    """Non-JSON and out-of-range replies are malformed."""
    server = serve((200, "not json"), (200, {**GOOD_REPLY, "answer_validity": 9}))
    judger = HttpJudger(logger, server.url)
    with pytest.raises(MalformedJudgment):
        judger.score(candidate)
    with pytest.raises(MalformedJudgment):
        judger.score(candidate)


def test_http_judger_unreachable(logger, candidate):
    """A closed port is JudgerUnavailable."""
    server = MockServer([])
    url = server.url
    server.httpd.server_close()
    with pytest.raises(JudgerUnavailable):
        HttpJudger(logger, url, timeout=1).score(candidate)


def test_parse_judgment():
    """The first JSON object naming every aspect wins."""
    reply = 'Here you go: {"note": 1} then ' + json.dumps(GOOD_REPLY) + " done."
    assert parse_judgment(reply) == JudgerScores(5, 4, 4, 5)
    with pytest.raises(MalformedJudgment):
        parse_judgment("")
    with pytest.raises(MalformedJudgment):
        parse_judgment("all good, 5/5")


def test_llm_prompt_lists_options_and_aspects(logger, candidate, tmp_path):
    """The judger prompt carries the candidate and all four aspects."""
    judger = LLMJudger(logger, str(tmp_path / ".env"))
    prompt = judger.prompt_for(candidate)
    assert "Which material covers the facade?" in prompt
    assert "A. Glass" in prompt
    assert "B. Brick" in prompt
    for aspect in GOOD_REPLY:
        assert aspect in prompt


class _RateLimited(litellm.exceptions.RateLimitError):
    """Rate-limit error without the provider response a real one carries."""

    def __init__(self):
        Exception.__init__(self, "slow down")
        self.message = "slow down"

    def __str__(self):
        return self.message


class _ConnectionRefused(litellm.exceptions.APIConnectionError):
    """Connection error without the provider request a real one carries."""

    def __init__(self):
        Exception.__init__(self, "connection refused")
        self.message = "connection refused"

    def __str__(self):
        return self.message


def _reply(content):
    return SimpleNamespace(choices=[SimpleNamespace(message=SimpleNamespace(content=content))])


@pytest.fixture
def scripted_completion(monkeypatch):
    """Fixture replacing the LLM call with scripted replies or errors."""
    calls = []

    def install(*outcomes):
        script = list(outcomes)

        def fake_completion(**kwargs):
            calls.append(kwargs)
            # the last outcome repeats once the script runs out
            outcome = script.pop(0) if len(script) > 1 else script[0]
            if isinstance(outcome, Exception):
                raise outcome
            return _reply(outcome)

        monkeypatch.setattr(llm_judger, "completion", fake_completion)
        return calls

    return install


def test_llm_judger_success(scripted_completion, logger, candidate, tmp_path):
    """A reply holding the four aspects parses into scores."""
    calls = scripted_completion("Scores: " + json.dumps(GOOD_REPLY))
    judger = LLMJudger(logger, str(tmp_path / ".env"), model="openai/judge", max_tokens=50)
    assert judger.score(candidate) == JudgerScores(5, 4, 4, 5)
    assert calls[0]["model"] == "openai/judge"
    assert calls[0]["max_tokens"] == 50
    assert "Which material covers the facade?" in calls[0]["messages"][0]["content"]


def test_llm_judger_rate_limit_is_retried(scripted_completion, logger, candidate, tmp_path):
    """A rate limit goes through the curation retry budget and then succeeds."""
    calls = scripted_completion(_RateLimited(), json.dumps(GOOD_REPLY))
    judger = LLMJudger(logger, str(tmp_path / ".env"))
    scores = judge(candidate, judger, retries=1, retry_delay=0.0, logger=logger)
    assert scores.criterion_relevance == 5
    assert len(calls) == 2


def test_llm_judger_rate_limit_exhausts(scripted_completion, logger, candidate, tmp_path):
    """A persistent rate limit stops after the retry budget."""
    calls = scripted_completion(_RateLimited())
    judger = LLMJudger(logger, str(tmp_path / ".env"))
    with pytest.raises(JudgerUnavailable) as exc_info:
        judge(candidate, judger, retries=2, retry_delay=0.0, logger=logger)
    assert exc_info.value.context["attempts"] == 3
    assert exc_info.value.context["id"] == "c1"
    assert len(calls) == 3


def test_llm_judger_connection_error(scripted_completion, logger, candidate, tmp_path):
    """A connection failure is JudgerUnavailable."""
    scripted_completion(_ConnectionRefused())
    with pytest.raises(JudgerUnavailable):
        LLMJudger(logger, str(tmp_path / ".env")).score(candidate)


def test_llm_judger_unusable_reply(scripted_completion, logger, candidate, tmp_path):
    """Replies without aspect scores are malformed and not retried."""
    calls = scripted_completion(None, "looks fine to me")
    judger = LLMJudger(logger, str(tmp_path / ".env"))
    with pytest.raises(MalformedJudgment):
        judge(candidate, judger, retries=3, retry_delay=0.0, logger=logger)
    assert len(calls) == 1


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
