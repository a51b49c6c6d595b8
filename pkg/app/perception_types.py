from enum import Enum


class Domain(str, Enum):
    IAA = "IAA"
    IQA = "IQA"
    ISTA = "ISTA"

    @classmethod
    def parse(cls, value: "str | Domain") -> "Domain":
        if isinstance(value, Domain):
            return value
        key = str(value).strip().upper()
        try:
            return cls(key)
        except ValueError:
            raise ValueError(
                f"Invalid domain '{value}'. Must be one of: IAA, IQA, ISTA."
            ) from None


class SceneType(str, Enum):
    Single = "Single Scene"
    Composite = "Composite Scene"


class FieldKind(str, Enum):
    Texture = "texture"
    Material = "material"
    Shape2D = "shape2d"
    Shape3D = "shape3d"
    Style = "style"


class ValidationMode(str, Enum):
    Strict = "strict"
    Lenient = "lenient"


class RewardMode(str, Enum):
    Gaussian = "gaussian"
    Threshold = "threshold"


class TableFormat(str, Enum):
    Text = "text"
    Markdown = "markdown"
    CSV = "csv"


class HighlightMark(str, Enum):
    Best = "best"
    Second = "second"
    NoMark = "none"


class JudgerAspect(str, Enum):
    QuestionValidity = "question_validity"
    AnswerValidity = "answer_validity"
    ReasoningValidity = "reasoning_validity"
    CriterionRelevance = "criterion_relevance"


class LeaderboardMetric(str, Enum):
    SRCC = "srcc"
    PLCC = "plcc"
    Combined = "combined"
    Accuracy = "accuracy"
