from typing import Any


class PerceptEvalError(Exception):
    """Base error. `context` carries where in the input the failure happened."""

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message: str = message
        self.context: dict[str, Any] = {
            k: v for k, v in context.items() if v is not None
        }

    def with_context(self, **context: Any) -> "PerceptEvalError":
        for key, value in context.items():
            if value is not None and key not in self.context:
                self.context[key] = value
        return self

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": "error",
            "error": type(self).__name__,
            "message": self.message,
            "context": dict(self.context),
        }

    def __str__(self) -> str:
        if not self.context:
            return self.message
        where = ", ".join(f"{k}={v}" for k, v in self.context.items())
        return f"{self.message} ({where})"


class ConfigError(PerceptEvalError):
    pass


class InvalidConfig(PerceptEvalError, ValueError):
    pass


class InputIOError(PerceptEvalError, OSError):
    pass


class ParseError(PerceptEvalError, ValueError):
    pass


class MalformedDocument(PerceptEvalError, ValueError):
    pass


class SchemaViolation(PerceptEvalError, ValueError):
    pass


class EmptyAnnotation(PerceptEvalError, ValueError):
    pass


class ScoreOutOfRange(PerceptEvalError, ValueError):
    pass


class LengthMismatch(PerceptEvalError, ValueError):
    pass


class AllZeroProbabilities(PerceptEvalError, ValueError):
    pass


class InvalidProbabilities(PerceptEvalError, ValueError):
    pass


class DegenerateRange(PerceptEvalError, ValueError):
    pass


class GroupTooSmall(PerceptEvalError, ValueError):
    pass


class InvalidRollout(PerceptEvalError, ValueError):
    pass


class ZeroVariance(PerceptEvalError, ValueError):
    pass


class EmptyInput(PerceptEvalError, ValueError):
    pass


class InvalidCandidate(PerceptEvalError, ValueError):
    pass


class MissingScores(PerceptEvalError, KeyError):
    def __init__(self, missing_ids: list[str], **context: Any):
        preview = ", ".join(missing_ids[:10])
        more = f" (+{len(missing_ids) - 10} more)" if len(missing_ids) > 10 else ""
        super().__init__(f"No judger scores for candidates: {preview}{more}", **context)
        self.missing_ids: list[str] = list(missing_ids)

    def __str__(self) -> str:
        return PerceptEvalError.__str__(self)


class MalformedJudgment(PerceptEvalError, ValueError):
    pass


class JudgerUnavailable(PerceptEvalError):
    pass
