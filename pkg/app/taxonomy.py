"""
Domain–Category–Criterion registry and the ISTA vocabulary.

Terms are matched case-insensitively after trimming; a multi-word entry
matches on its full string. Entries written as "A / B" also match each
alternative on its own.
"""

import logging
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterable, Mapping

import yaml

from errors import ConfigError, InvalidConfig
from perception_types import Domain, FieldKind, ValidationMode

logger = logging.getLogger(__name__)

NOT_APPLICABLE: str = "N/A"

WEAK_WEIGHT: int = 1
MEDIUM_WEIGHT: int = 2
STRONG_WEIGHT: int = 3


@dataclass(frozen=True)
class Category:
    domain: Domain
    name: str
    abbreviation: str
    criteria: tuple[str, ...]


_CATEGORY_TABLE: dict[Domain, list[tuple[str, str, list[str]]]] = {
    Domain.IAA: [
        (
            "Composition & Design",
            "Comp.",
            [
                "Visual Balance",
                "Hierarchical Emphasis",
                "Structural Organization",
                "Compositional Rhythm",
                "Harmonic Unity",
                "Composition & Design Level",
            ],
        ),
        (
            "Visual Elements & Structure",
            "VisStr.",
            [
                "Line Dynamics",
                "Shape Clarity",
                "Form Realization",
                "Spatial Illusion",
                "Light Modeling",
                "Visual Elements & Structure Level",
            ],
        ),
        (
            "Technical Execution",
            "Tech.",
            [
                "Material Proficiency",
                "Rendering Precision",
                "Focus Control",
                "Tonal and Exposure Control",
                "Technical Execution Level",
            ],
        ),
        (
            "Originality & Creativity",
            "Creat.",
            [
                "Concept Innovation",
                "Creative Problem-Solving",
                "Originality & Creativity Level",
            ],
        ),
        (
            "Theme & Communication",
            "Theme.",
            [
                "Subject Clarity",
                "Narrative Depth",
                "Cultural Insight",
                "Theme & Communication Level",
            ],
        ),
        (
            "Emotion & Viewer Response",
            "Emo.",
            [
                "Emotional Resonance",
                "Viewer Engagement",
                "Interpretive Openness",
                "Emotion & Viewer Response Level",
            ],
        ),
        ("Overall Gestalt", "Gest.", ["Holistic Cohesion", "Overall Gestalt Level"]),
        ("Comprehensive Evaluation", "CompEv.", ["Comprehensive Evaluation Level"]),
    ],
    Domain.IQA: [
        ("Distortion Location", "Loc.", ["Location Description", "Object Association"]),
        ("Distortion Severity", "Sev.", ["Severity Level"]),
        ("Distortion Type", "Type.", ["Distortion Types Present"]),
    ],
    Domain.ISTA: [
        ("Scene Decomposition Principles", "Scene.", ["Scene Classification"]),
        ("Physical Structure", "Phys.", ["Base Morphology", "Spatial Arrangement"]),
        (
            "Material Representation",
            "Mat.",
            ["Material Identification", "Surface Behavior"],
        ),
        ("Geometric Composition", "Geo.", ["2D Contour", "3D Volume"]),
        (
            "Semantic Perception",
            "Sem.",
            ["Functional Suggestion", "Stylistic Classification"],
        ),
    ],
}

CATEGORIES: tuple[Category, ...] = tuple(
    Category(domain, name, abbreviation, tuple(criteria))
    for domain, rows in _CATEGORY_TABLE.items()
    for name, abbreviation, criteria in rows
)


def categories(domain: Domain | str) -> tuple[Category, ...]:
    domain = Domain.parse(domain)
    return tuple(c for c in CATEGORIES if c.domain == domain)


def find_category(domain: Domain | str, name: str) -> Category | None:
    """Look up a category by full name or abbreviation ("Comp." or "Comp")."""
    key = normalize_term(name).rstrip(".")
    for category in categories(domain):
        if key in (
            normalize_term(category.name),
            normalize_term(category.abbreviation).rstrip("."),
        ):
            return category
    return None


TEXTURE_WEAK: tuple[str, ...] = (
    "smooth", "plain", "uniform", "lined", "grid", "striped", "chequered",
    "dotted", "freckled",
)  # fmt: skip

TEXTURE_MEDIUM: tuple[str, ...] = (
    "braided", "woven", "crosshatched", "meshed", "cobwebbed", "lacelike",
    "knitted", "spiralled", "swirly",
)  # fmt: skip

TEXTURE_STRONG: tuple[str, ...] = (
    "bumpy", "blotchy", "bubbly", "cracked", "crystalline", "flecked", "frilly",
    "grooved", "honeycombed", "marbled", "matted", "paisley", "perforated",
    "pitted", "pleated", "porous", "scaly", "smeared", "sprinkled", "stratified",
    "studded", "veined", "wrinkled", "zigzagged",
)  # fmt: skip

# Base Morphology prior list offered to annotators. Not identical to the
# weight table: e.g. "fibrous" is listed here but carries no weight.
BASE_MORPHOLOGY: tuple[str, ...] = (
    "blotchy", "braided", "bubbly", "bumpy", "chequered", "cobwebbed", "cracked",
    "crosshatched", "crystalline", "dotted", "fibrous", "flecked", "freckled",
    "frilly", "grid", "grooved", "honeycombed", "interlaced", "knitted",
    "lacelike", "lined", "marbled", "matted", "meshed", "paisley", "perforated",
    "pitted", "pleated", "porous", "scaly", "smeared", "spiralled", "sprinkled",
    "stratified", "striped", "studded", "swirly", "veined", "woven", "wrinkled",
    "zigzagged", "smooth",
)  # fmt: skip

MATERIALS: dict[str, tuple[str, ...]] = {
    "natural": ("Foliage", "Grass", "Skin", "Stone", "Wood", "Water", "Hair"),
    "man_made": (
        "Brick", "Carpet", "Ceramic", "Fabric", "Glass", "Leather", "Metal",
        "Mirror", "Painted Surface", "Paper", "Plastic", "Polished Stone", "Tile",
        "Wallpaper", "Concrete", "Food Surface",
    ),
    "environmental": ("Sky", "Clouds", "Fog / Mist"),
}  # fmt: skip

SHAPES_2D: tuple[str, ...] = (
    "Rectangle", "Square", "Circle", "Ellipse / Oval", "Triangle",
    "Equilateral Triangle", "Isosceles Triangle", "Scalene Triangle",
    "Right Triangle", "Trapezoid / Trapezium", "Parallelogram", "Rhombus",
    "Pentagon", "Hexagon", "Heptagon", "Octagon", "Nonagon", "Decagon", "Star",
    "Pentagram", "Hexagram", "Cross", "Arrow", "Semicircle", "Sector",
    "Crescent", "Annulus / Ring", "Heart", "Lemniscate", "Lune / Bow Shape",
    "Spiral", "Waveform", "Teardrop",
)  # fmt: skip

SHAPES_3D: tuple[str, ...] = (
    "Sphere", "Ellipsoid", "Cube", "Cuboid", "Cylinder", "Cone", "Pyramid",
    "Tetrahedron", "Octahedron", "Dodecahedron", "Icosahedron", "Prism",
    "Triangular Prism", "Rectangular Prism", "Pentagonal Prism",
    "Hexagonal Prism", "Torus", "Annular Torus", "Paraboloid", "Hyperboloid",
    "Elliptic Cylinder", "Hyperbolic Cylinder", "Truncated Cone",
    "Truncated Pyramid", "Capsule", "Dome", "Lens", "Bipyramid", "Frustum",
    "Möbius Strip", "Knot", "Klein Bottle",
)  # fmt: skip

STYLES: tuple[str, ...] = (
    "Embossed", "Engraved", "Rough", "Smooth", "Matte", "Glossy", "Brushed",
    "Honeycomb", "Geometric", "Fractal", "Tile Mosaic", "Chinese Cloud Pattern",
    "Dragon Scale", "Cyberpunk Holographic", "Steampunk Mechanical",
)  # fmt: skip

MATERIAL_GROUPS: tuple[str, ...] = ("natural", "man_made", "environmental")


def normalize_term(term: str) -> str:
    return unicodedata.normalize("NFKC", str(term)).strip().casefold()


def is_not_applicable(term: str) -> bool:
    return normalize_term(term) == NOT_APPLICABLE.casefold()


def _match_keys(terms: Iterable[str]) -> frozenset[str]:
    keys: set[str] = set()
    for term in terms:
        keys.add(normalize_term(term))
        if "/" in term:
            keys.update(normalize_term(part) for part in term.split("/"))
    keys.discard("")
    return frozenset(keys)


def _term_tuple(terms: Iterable[str], name: str) -> tuple[str, ...]:
    out: list[str] = []
    for term in terms:
        if not isinstance(term, str) or not term.strip():
            raise InvalidConfig(f"Lexicon '{name}' contains an empty or non-string term")
        if term.strip() not in out:
            out.append(term.strip())
    return tuple(out)


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    note: str = ""


@dataclass(frozen=True)
class Lexicon:
    texture_weak: tuple[str, ...]
    texture_medium: tuple[str, ...]
    texture_strong: tuple[str, ...]
    material_terms: Mapping[str, tuple[str, ...]]
    shape2d_terms: tuple[str, ...]
    shape3d_terms: tuple[str, ...]
    style_terms: tuple[str, ...]
    morphology_terms: tuple[str, ...] = ()
    _keys: Mapping[str, frozenset[str]] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        for name in (
            "texture_weak",
            "texture_medium",
            "texture_strong",
            "shape2d_terms",
            "shape3d_terms",
            "style_terms",
            "morphology_terms",
        ):
            object.__setattr__(self, name, _term_tuple(getattr(self, name), name))

        unknown_groups = set(self.material_terms) - set(MATERIAL_GROUPS)
        if unknown_groups:
            raise InvalidConfig(
                f"Unknown material groups {sorted(unknown_groups)}; "
                f"expected {list(MATERIAL_GROUPS)}"
            )
        materials = MappingProxyType(
            {
                group: _term_tuple(self.material_terms.get(group, ()), group)
                for group in MATERIAL_GROUPS
            }
        )
        object.__setattr__(self, "material_terms", materials)

        weak = _match_keys(self.texture_weak)
        medium = _match_keys(self.texture_medium)
        strong = _match_keys(self.texture_strong)
        overlap = (weak & medium) | (weak & strong) | (medium & strong)
        if overlap:
            raise InvalidConfig(
                f"Texture weight sets must be disjoint; shared terms: {sorted(overlap)}"
            )

        keys = {
            "weak": weak,
            "medium": medium,
            "strong": strong,
            FieldKind.Texture.value: weak
            | medium
            | strong
            | _match_keys(self.morphology_terms),
            FieldKind.Material.value: _match_keys(
                t for group in materials.values() for t in group
            ),
            FieldKind.Shape2D.value: _match_keys(self.shape2d_terms),
            FieldKind.Shape3D.value: _match_keys(self.shape3d_terms),
            FieldKind.Style.value: _match_keys(self.style_terms),
        }
        object.__setattr__(self, "_keys", MappingProxyType(keys))

    def weight_of(self, term: str) -> int:
        key = normalize_term(term)
        if key in self._keys["weak"]:
            return WEAK_WEIGHT
        if key in self._keys["medium"]:
            return MEDIUM_WEIGHT
        if key in self._keys["strong"]:
            return STRONG_WEIGHT
        return 0

    def contains(self, field_kind: FieldKind | str, term: str) -> bool:
        return normalize_term(term) in self._keys[FieldKind(field_kind).value]

    def to_dict(self) -> dict[str, Any]:
        return {
            "texture": {
                "weak": list(self.texture_weak),
                "medium": list(self.texture_medium),
                "strong": list(self.texture_strong),
            },
            "morphology": list(self.morphology_terms),
            "material": {g: list(ts) for g, ts in self.material_terms.items()},
            "shape2d": list(self.shape2d_terms),
            "shape3d": list(self.shape3d_terms),
            "style": list(self.style_terms),
        }


_DEFAULT_LEXICON: Lexicon | None = None


def default_lexicon() -> Lexicon:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = Lexicon(
            texture_weak=TEXTURE_WEAK,
            texture_medium=TEXTURE_MEDIUM,
            texture_strong=TEXTURE_STRONG,
            material_terms=MATERIALS,
            shape2d_terms=SHAPES_2D,
            shape3d_terms=SHAPES_3D,
            style_terms=STYLES,
            morphology_terms=BASE_MORPHOLOGY,
        )
    return _DEFAULT_LEXICON


def texture_weight(term: str, lexicon: Lexicon | None = None) -> int:
    """Discrete texture intensity: 1 weak, 2 medium, 3 strong, 0 otherwise."""
    lexicon = lexicon or default_lexicon()
    return lexicon.weight_of(term)


def validate_term(
    field_kind: FieldKind | str,
    term: str,
    lexicon: Lexicon | None = None,
    mode: ValidationMode | str = ValidationMode.Strict,
) -> ValidationResult:
    lexicon = lexicon or default_lexicon()
    kind = FieldKind(field_kind)
    mode = ValidationMode(mode)

    if not str(term).strip():
        return ValidationResult(False, f"empty {kind.value} term")

    if lexicon.contains(kind, term):
        if kind == FieldKind.Texture and lexicon.weight_of(term) == 0:
            return ValidationResult(
                True, f"'{term}' is a morphology term without a texture weight"
            )
        return ValidationResult(True)

    if mode == ValidationMode.Lenient:
        return ValidationResult(
            True, f"'{term}' is a free-form {kind.value} extension"
        )
    return ValidationResult(False, f"'{term}' is not a {kind.value} lexicon term")


def load_lexicon(path: str | Path) -> Lexicon:
    """
    Load a lexicon override from YAML.

    Schema (every key optional):
        extend: bool            # merge onto the built-in default
        texture: {weak: [...], medium: [...], strong: [...]}
        morphology: [...]
        material: {natural: [...], man_made: [...], environmental: [...]}
        shape2d: [...]
        shape3d: [...]
        style: [...]
    """
    lexicon_path = Path(path)
    try:
        with open(lexicon_path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle) or {}
    except FileNotFoundError:
        raise ConfigError("Lexicon file not found", path=str(lexicon_path)) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"Improper lexicon YAML: {exc}", path=str(lexicon_path))

    if not isinstance(data, dict):
        raise ConfigError("Lexicon file did not contain a mapping", path=str(lexicon_path))

    extend = bool(data.get("extend", False))
    base = default_lexicon().to_dict() if extend else {}
    texture = data.get("texture") or {}
    material = data.get("material") or {}
    base_texture = base.get("texture", {})
    base_material = base.get("material", {})

    def merged(current: Any, extra: Any) -> list[str]:
        return list(current or []) + list(extra or [])

    lexicon = Lexicon(
        texture_weak=merged(base_texture.get("weak"), texture.get("weak")),
        texture_medium=merged(base_texture.get("medium"), texture.get("medium")),
        texture_strong=merged(base_texture.get("strong"), texture.get("strong")),
        material_terms={
            g: merged(base_material.get(g), material.get(g)) for g in MATERIAL_GROUPS
        },
        shape2d_terms=merged(base.get("shape2d"), data.get("shape2d")),
        shape3d_terms=merged(base.get("shape3d"), data.get("shape3d")),
        style_terms=merged(base.get("style"), data.get("style")),
        morphology_terms=merged(base.get("morphology"), data.get("morphology")),
    )
    logger.debug("Loaded lexicon override from %s (extend=%s)", lexicon_path, extend)
    return lexicon
