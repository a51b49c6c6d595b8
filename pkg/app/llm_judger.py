import json
import logging
import re
from pathlib import Path

from dotenv import load_dotenv
from jinja2 import Environment, FileSystemLoader, StrictUndefined
import litellm
from litellm import completion

from curation import ASPECTS, CandidateQA, JudgerScores
from errors import JudgerUnavailable, MalformedJudgment

PROMPTS_DIR: Path = Path(__file__).parent / "resources" / "prompts"
JUDGER_TEMPLATE: str = "judger.j2"

_JSON_OBJECT = re.compile(r"\{.*?\}", re.DOTALL)

litellm.drop_params = True

_prompts = Environment(
    loader=FileSystemLoader(PROMPTS_DIR),
    trim_blocks=True,
    lstrip_blocks=True,
    # a missing candidate field fails the render instead of printing blank
    undefined=StrictUndefined,
)


def render_judger_prompt(candidate: CandidateQA) -> str:
    template = _prompts.get_template(JUDGER_TEMPLATE)
    return template.render(candidate=candidate.to_dict(), aspects=ASPECTS)


def parse_judgment(reply: str | None) -> JudgerScores:
    """First JSON object in the reply that names all four aspects."""
    if not reply:
        raise MalformedJudgment("judger returned an empty reply")
    for match in _JSON_OBJECT.finditer(reply):
        try:
            data = json.loads(match.group(0))
        except json.JSONDecodeError:
            continue
        if isinstance(data, dict) and all(a in data for a in ASPECTS):
            return JudgerScores.from_mapping(data)
    raise MalformedJudgment(f"no aspect scores in judger reply {reply[:80]!r}")


class LLMJudger:
    def __init__(
        self,
        logger: logging.Logger,
        token_path: str,
        model: str = "openai/gpt-4o",
        max_tokens: int = 200,
        temperature: float = 0.0,
        api_base: str | None = None,
    ):
        self.logger: logging.Logger = logger
        self.max_tokens: int = max_tokens
        # loading in secret API token from your env file
        load_dotenv(token_path)
        self.model: str = model
        self.temperature: float = temperature
        self.api_base: str | None = api_base

    def prompt_for(self, candidate: CandidateQA) -> str:
        return render_judger_prompt(candidate)

    def score(self, candidate: CandidateQA) -> JudgerScores:
        message = [{"role": "user", "content": self.prompt_for(candidate)}]

        if self.logger.isEnabledFor(logging.DEBUG):
            payload = {
                "model": self.model,
                "messages": message,
                "temperature": self.temperature,
                "max_tokens": self.max_tokens,
            }
            self.logger.debug(
                "Judger request payload: %s",
                json.dumps(payload, ensure_ascii=False, indent=2),
            )

        # rate limits surface as unavailable so the curation retry budget bounds them
        try:
            cmp = completion(
                model=self.model,
                messages=message,
                temperature=self.temperature,
                max_tokens=self.max_tokens,
                api_base=self.api_base,
            )
        except litellm.exceptions.RateLimitError as e:
            self.logger.warning(f"Rate limit error: {e}")
            raise JudgerUnavailable(f"{self.model} rate limited: {e}", id=candidate.id) from e
        except (
            litellm.exceptions.APIConnectionError,
            litellm.exceptions.ServiceUnavailableError,
            litellm.exceptions.Timeout,
        ) as e:
            raise JudgerUnavailable(f"{self.model} unavailable: {e}", id=candidate.id) from e

        reply: str | None = cmp.choices[0].message.content
        return parse_judgment(reply)
