"""
ISTA structural annotations: parsing, serialization and lexicon validation.

Documents use the structural-annotation template key names verbatim. Facet
lists are kept exactly as written, "N/A" entries included; scoring decides
what to skip.
"""

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable

from jsonschema import Draft7Validator
from jsonschema.exceptions import best_match

from errors import MalformedDocument, PerceptEvalError, SchemaViolation
from perception_types import FieldKind, SceneType, ValidationMode
from taxonomy import Lexicon, default_lexicon, is_not_applicable, validate_term

logger = logging.getLogger(__name__)

SCHEMA_PATH: Path = (
    Path(__file__).resolve().parent
    / "resources"
    / "schemas"
    / "structural_annotation.schema.json"
)

MAX_BASE_MORPHOLOGY: int = 3

# (group key, facet key, Component attribute)
FACETS: tuple[tuple[str, str, str], ...] = (
    ("PhysicalStructure", "BaseMorphology", "base_morphology"),
    ("PhysicalStructure", "Arrangement", "arrangement"),
    ("PhysicalStructure", "Dynamics", "dynamics"),
    ("MaterialRepresentation", "MaterialClass", "material_class"),
    ("MaterialRepresentation", "SurfaceProperties", "surface_properties"),
    ("GeometricComposition", "PlanarContour", "planar_contour"),
    ("GeometricComposition", "VolumetricForm", "volumetric_form"),
    ("SemanticPerception", "FunctionalInference", "functional_inference"),
    ("SemanticPerception", "StyleType", "style_type"),
)
GROUPS: tuple[str, ...] = tuple(dict.fromkeys(group for group, _, _ in FACETS))

# facets checked against the lexicon; (*)-marked template fields are required
# to use exact lexicon terms, the rest are optional (!) fields
LEXICON_FACETS: dict[str, tuple[FieldKind, bool]] = {
    "base_morphology": (FieldKind.Texture, True),
    "material_class": (FieldKind.Material, True),
    "planar_contour": (FieldKind.Shape2D, False),
    "volumetric_form": (FieldKind.Shape3D, False),
    "style_type": (FieldKind.Style, False),
}

_COMPONENT_KEYS = ("ComponentName", "DescriptionContent")
_SCENE_KEYS = ("SceneType", "SceneName", "DescriptionContent", "Components")


@dataclass(frozen=True)
class Component:
    name: str
    base_morphology: tuple[str, ...] = ()
    arrangement: tuple[str, ...] = ()
    dynamics: tuple[str, ...] = ()
    material_class: tuple[str, ...] = ()
    surface_properties: tuple[str, ...] = ()
    planar_contour: tuple[str, ...] = ()
    volumetric_form: tuple[str, ...] = ()
    functional_inference: tuple[str, ...] = ()
    style_type: tuple[str, ...] = ()
    # unknown keys, kept for round trips and never scored
    extras: dict[str, Any] = field(default_factory=dict)
    content_extras: dict[str, Any] = field(default_factory=dict)

    def facet(self, attribute: str) -> tuple[str, ...]:
        return getattr(self, attribute)


@dataclass(frozen=True)
class SceneAnnotation:
    scene_type: SceneType
    scene_name: str
    components: tuple[Component, ...] = ()
    # whole-image facets given at scene level
    scene_component: Component | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Finding:
    path: str
    message: str

    def to_dict(self) -> dict[str, str]:
        return {"path": self.path, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    warnings: tuple[Finding, ...] = ()
    errors: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict[str, Any]:
        return {
            "errors": [f.to_dict() for f in self.errors],
            "warnings": [f.to_dict() for f in self.warnings],
        }


def effective_count(values: Iterable[str]) -> int:
    """Number of entries that are not the "N/A" sentinel."""
    return sum(1 for value in values if not is_not_applicable(value))


@lru_cache(maxsize=1)
def _schema_validator() -> Draft7Validator:
    with open(SCHEMA_PATH, "r", encoding="utf-8") as handle:
        schema = json.load(handle)
    Draft7Validator.check_schema(schema)
    return Draft7Validator(schema)


def _json_path(parts: Iterable[Any]) -> str:
    path = "$"
    for part in parts:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def _check_schema(data: Any) -> None:
    error = best_match(_schema_validator().iter_errors(data))
    if error is None:
        return
    parts = list(error.absolute_path)
    if error.validator == "required" and isinstance(error.instance, dict):
        missing = [k for k in error.validator_value if k not in error.instance]
        if missing:
            parts.append(missing[0])
    raise SchemaViolation(error.message, path=_json_path(parts))


def _parse_scene_type(value: str) -> SceneType:
    key = value.strip().casefold().replace("-object", "")
    if key.endswith("scene"):
        key = key[: -len("scene")].strip()
    if key == "single":
        return SceneType.Single
    if key == "composite":
        return SceneType.Composite
    raise SchemaViolation(
        f"Unknown SceneType '{value}'. Expected 'Single Scene' or 'Composite Scene'.",
        path="$.SceneType",
    )


def _component_from_description(
    name: str, description: dict[str, Any], extras: dict[str, Any]
) -> Component:
    facets: dict[str, tuple[str, ...]] = {}
    content_extras: dict[str, Any] = {}

    for key, value in description.items():
        if key not in GROUPS:
            content_extras[key] = value

    for group in GROUPS:
        group_values: dict[str, Any] = description.get(group) or {}
        known = {facet for g, facet, _ in FACETS if g == group}
        for key, value in group_values.items():
            if key not in known:
                content_extras.setdefault(group, {})[key] = value

    for group, facet, attribute in FACETS:
        facets[attribute] = tuple((description.get(group) or {}).get(facet, []))

    return Component(name=name, extras=extras, content_extras=content_extras, **facets)


def annotation_from_dict(data: Any) -> SceneAnnotation:
    if not isinstance(data, dict):
        raise SchemaViolation("Annotation document must be a JSON object", path="$")
    _check_schema(data)

    components: list[Component] = []
    for item in data["Components"]:
        extras = {k: v for k, v in item.items() if k not in _COMPONENT_KEYS}
        components.append(
            _component_from_description(
                item["ComponentName"], item.get("DescriptionContent") or {}, extras
            )
        )

    scene_component = None
    if "DescriptionContent" in data:
        scene_component = _component_from_description(
            data["SceneName"], data["DescriptionContent"] or {}, {}
        )

    return SceneAnnotation(
        scene_type=_parse_scene_type(data["SceneType"]),
        scene_name=data["SceneName"],
        components=tuple(components),
        scene_component=scene_component,
        extras={k: v for k, v in data.items() if k not in _SCENE_KEYS},
    )


def _decode(document: bytes | str) -> str:
    if isinstance(document, str):
        return document
    try:
        return bytes(document).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedDocument(
            f"Document is not valid UTF-8: {exc.reason}", position=exc.start
        ) from None


def _load_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(
            f"Invalid JSON: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
            position=exc.pos,
        ) from None
    except (ValueError, RecursionError) as exc:
        raise MalformedDocument(f"Invalid JSON: {exc}") from None


def parse_annotation(document: bytes | str) -> SceneAnnotation:
    return annotation_from_dict(_load_json(_decode(document)))


def parse_annotation_batch(data: bytes | str) -> list[tuple[str, SceneAnnotation]]:
    """
    Parse a batch: one JSON document per line, a top-level array, or a single
    (possibly pretty-printed) document. Record ids come from an "id" key, else
    the 1-based record number.
    """
    text = _decode(data)
    records: list[tuple[str, SceneAnnotation]] = []

    stripped = text.strip()
    if stripped.startswith("{") and "\n" in stripped:
        try:
            single = json.loads(stripped)
        except (ValueError, RecursionError):
            single = None
        if isinstance(single, dict):
            ann = annotation_from_dict(single)
            return [(str(ann.extras.get("id", 1)), ann)]

    if stripped.startswith("["):
        items = _load_json(text)
        for index, item in enumerate(items, start=1):
            try:
                ann = annotation_from_dict(item)
            except PerceptEvalError as exc:
                raise exc.with_context(record=index)
            records.append((str(ann.extras.get("id", index)), ann))
        return records

    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            ann = parse_annotation(line)
        except PerceptEvalError as exc:
            raise exc.with_context(line=line_number)
        records.append((str(ann.extras.get("id", line_number)), ann))
    return records


def _description_to_dict(component: Component) -> dict[str, Any]:
    description: dict[str, Any] = {}
    for group in GROUPS:
        values: dict[str, Any] = {}
        for g, facet, attribute in FACETS:
            if g == group:
                values[facet] = list(component.facet(attribute))
        extra = component.content_extras.get(group)
        if isinstance(extra, dict):
            values.update(extra)
        description[group] = values
    for key, value in component.content_extras.items():
        if key not in GROUPS:
            description[key] = value
    return description


def annotation_to_dict(ann: SceneAnnotation) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "SceneType": ann.scene_type.value,
        "SceneName": ann.scene_name,
    }
    if ann.scene_component is not None:
        doc["DescriptionContent"] = _description_to_dict(ann.scene_component)
    doc["Components"] = [
        {
            "ComponentName": c.name,
            "DescriptionContent": _description_to_dict(c),
            **c.extras,
        }
        for c in ann.components
    ]
    doc.update(ann.extras)
    return doc


def serialize_annotation(ann: SceneAnnotation) -> bytes:
    return json.dumps(annotation_to_dict(ann), indent=4, ensure_ascii=False).encode(
        "utf-8"
    )


def _validate_component(
    component: Component,
    path: str,
    lexicon: Lexicon,
    mode: ValidationMode,
    warnings: list[Finding],
    errors: list[Finding],
) -> None:
    for _, facet, attribute in FACETS:
        if attribute not in LEXICON_FACETS:
            continue
        kind, required = LEXICON_FACETS[attribute]
        for term in component.facet(attribute):
            if is_not_applicable(term):
                continue
            result = validate_term(kind, term, lexicon, mode)
            finding = Finding(f"{path}.{facet}", result.note)
            if result.ok:
                if result.note:
                    warnings.append(finding)
            elif required and mode == ValidationMode.Strict:
                errors.append(finding)
            else:
                warnings.append(finding)

    morphology = effective_count(component.base_morphology)
    if morphology == 0:
        warnings.append(
            Finding(f"{path}.BaseMorphology", "no base morphology term given")
        )
    elif morphology > MAX_BASE_MORPHOLOGY:
        warnings.append(
            Finding(
                f"{path}.BaseMorphology",
                f"{morphology} terms given; select 1-{MAX_BASE_MORPHOLOGY}",
            )
        )


def validate_annotation(
    ann: SceneAnnotation,
    lexicon: Lexicon | None = None,
    mode: ValidationMode | str = ValidationMode.Strict,
) -> ValidationReport:
    lexicon = lexicon or default_lexicon()
    mode = ValidationMode(mode)
    warnings: list[Finding] = []
    errors: list[Finding] = []

    count = len(ann.components)
    if ann.scene_type == SceneType.Composite and count < 2:
        warnings.append(
            Finding("$.Components", f"Composite scene with {count} component(s)")
        )
    if ann.scene_type == SceneType.Single and count > 1:
        warnings.append(
            Finding("$.Components", f"Single scene with {count} components")
        )

    seen: set[str] = set()
    for index, component in enumerate(ann.components):
        path = f"$.Components[{index}]"
        if component.name in seen:
            errors.append(
                Finding(f"{path}.ComponentName", f"duplicate name '{component.name}'")
            )
        seen.add(component.name)
        _validate_component(
            component, f"{path}.DescriptionContent", lexicon, mode, warnings, errors
        )

    if ann.scene_component is not None:
        _validate_component(
            ann.scene_component, "$.DescriptionContent", lexicon, mode, warnings, errors
        )

    for finding in errors:
        logger.debug("Annotation error at %s: %s", finding.path, finding.message)
    return ValidationReport(warnings=tuple(warnings), errors=tuple(errors))
