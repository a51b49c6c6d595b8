"""
Deterministic structure–texture richness score of a structural annotation.

Per component, four integer sub-scores are summed: physical structure
(texture weights of base morphology terms plus arrangement count), material
(material classes plus surface properties), geometry (planar contours plus
volumetric forms) and semantics (functional inferences plus style types).
"N/A" entries never count. The image score adds the component count and is
clipped to 100.
"""

from dataclasses import dataclass
from typing import Any

from annotation import Component, SceneAnnotation, effective_count
from errors import EmptyAnnotation
from taxonomy import Lexicon, default_lexicon, is_not_applicable, texture_weight

MAX_SCORE: int = 100


@dataclass(frozen=True)
class ComponentScore:
    s_ps: int
    s_mr: int
    s_gc: int
    s_sp: int

    @property
    def total(self) -> int:
        return self.s_ps + self.s_mr + self.s_gc + self.s_sp

    def to_dict(self) -> dict[str, int]:
        return {
            "s_ps": self.s_ps,
            "s_mr": self.s_mr,
            "s_gc": self.s_gc,
            "s_sp": self.s_sp,
            "total": self.total,
        }


@dataclass(frozen=True)
class IstaScore:
    raw: int
    per_component: tuple[tuple[str, ComponentScore], ...]

    @property
    def clipped(self) -> int:
        return min(self.raw, MAX_SCORE)

    def to_dict(self, record_id: str | None = None) -> dict[str, Any]:
        out: dict[str, Any] = {} if record_id is None else {"id": record_id}
        out["raw"] = self.raw
        out["clipped"] = self.clipped
        out["per_component"] = [
            {"name": name, **score.to_dict()} for name, score in self.per_component
        ]
        return out


def score_physical_structure(c: Component, lexicon: Lexicon | None = None) -> int:
    # dynamics is retained by the parser but never scored
    lexicon = lexicon or default_lexicon()
    weights = sum(
        texture_weight(term, lexicon)
        for term in c.base_morphology
        if not is_not_applicable(term)
    )
    return weights + effective_count(c.arrangement)


def score_material(c: Component) -> int:
    return effective_count(c.material_class) + effective_count(c.surface_properties)


def score_geometry(c: Component) -> int:
    return effective_count(c.planar_contour) + effective_count(c.volumetric_form)


def score_semantic(c: Component) -> int:
    return effective_count(c.functional_inference) + effective_count(c.style_type)


def score_component(c: Component, lexicon: Lexicon | None = None) -> ComponentScore:
    return ComponentScore(
        s_ps=score_physical_structure(c, lexicon),
        s_mr=score_material(c),
        s_gc=score_geometry(c),
        s_sp=score_semantic(c),
    )


def score_image(ann: SceneAnnotation, lexicon: Lexicon | None = None) -> IstaScore:
    lexicon = lexicon or default_lexicon()

    if ann.components:
        per_component = tuple(
            (c.name, score_component(c, lexicon)) for c in ann.components
        )
    elif ann.scene_component is not None:
        # the whole image counts as one component
        per_component = ((ann.scene_name, score_component(ann.scene_component, lexicon)),)
    else:
        raise EmptyAnnotation(
            "Annotation has neither components nor scene-level facets",
            scene=ann.scene_name,
        )

    raw = len(per_component) + sum(score.total for _, score in per_component)
    return IstaScore(raw=raw, per_component=per_component)
