"""
Tests for the structure-texture richness score.
"""

import importlib.util
import json
import sys
from pathlib import Path

import numpy as np
import pytest

# Add app directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "app"))

from annotation import Component, SceneAnnotation, parse_annotation, parse_annotation_batch
from errors import EmptyAnnotation
from ista_score import (
    MAX_SCORE,
    score_component,
    score_geometry,
    score_image,
    score_material,
    score_physical_structure,
    score_semantic,
)
from perception_types import SceneType
from taxonomy import BASE_MORPHOLOGY, TEXTURE_MEDIUM, TEXTURE_STRONG, TEXTURE_WEAK

FIXTURES = Path(__file__).parent / "fixtures"
ORACLE_PATH = Path(__file__).parent.parent / "scripts" / "ista_oracle.py"

VOCABULARY = (
    list(TEXTURE_WEAK)
    + list(TEXTURE_MEDIUM)
    + list(TEXTURE_STRONG)
    + list(BASE_MORPHOLOGY)
    + ["N/A", "n/a", "Glass", "Cuboid", "unheard-of"]
)


@pytest.fixture(scope="module")
def oracle():
    """Fixture loading the brute-force scorer from scripts/."""
    spec = importlib.util.spec_from_file_location("ista_oracle", ORACLE_PATH)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


@pytest.fixture
def skyscraper():
    """Fixture providing the parsed urban skyscraper annotation."""
    return parse_annotation((FIXTURES / "skyscraper.json").read_bytes())


def test_skyscraper_scores_thirteen(skyscraper):
    """Buildings score 9, sky 2, and two components add 2."""
    result = score_image(skyscraper)
    assert result.raw == 13
    assert result.clipped == 13

    names = [name for name, _ in result.per_component]
    assert names == ["Buildings", "Sky Background"]
    buildings = result.per_component[0][1]
    sky = result.per_component[1][1]
    assert (buildings.s_ps, buildings.s_mr, buildings.s_gc, buildings.s_sp) == (2, 4, 2, 1)
    assert buildings.total == 9
    assert (sky.s_ps, sky.s_mr, sky.s_gc, sky.s_sp) == (1, 1, 0, 0)
    assert sky.total == 2


def test_sub_scores_skip_na():
    """Only non-"N/A" entries count; dynamics never counts."""
    c = Component(
        name="x",
        base_morphology=("N/A", "cracked", "fibrous"),
        arrangement=("N/A",),
        dynamics=("Rippling", "Flowing"),
        material_class=("Glass", "n/a"),
        surface_properties=("Glossy",),
        planar_contour=("N/A",),
        volumetric_form=("Sphere", "Dome"),
        functional_inference=(),
        style_type=("Baroque",),
    )
    assert score_physical_structure(c) == 3
    assert score_material(c) == 2
    assert score_geometry(c) == 2
    assert score_semantic(c) == 1
    assert score_component(c).total == 8


def test_all_na_component_scores_one():
    """A component with nothing but "N/A" still adds its one point."""
    c = Component(name="blank", base_morphology=("N/A",), material_class=("N/A",))
    ann = SceneAnnotation(SceneType.Single, "blank", components=(c,))
    assert score_image(ann).raw == 1


def test_whole_image_path():
    """Scene-level facets score as a single component named after the scene."""
    doc = {
        "SceneType": "Single Scene",
        "SceneName": "Backdrop",
        "Components": [],
        "DescriptionContent": {
            "PhysicalStructure": {"BaseMorphology": ["smooth"]},
            "MaterialRepresentation": {"MaterialClass": ["Paper"]},
        },
    }
    result = score_image(parse_annotation(json.dumps(doc)))
    assert result.raw == 3
    assert result.per_component[0][0] == "Backdrop"


def test_nothing_to_score():
    """No components and no scene facets is an EmptyAnnotation."""
    ann = SceneAnnotation(SceneType.Single, "void")
    with pytest.raises(EmptyAnnotation):
        score_image(ann)


def test_clipped_at_one_hundred():
    """Thirty components worth 7 each exceed 100 raw and clip to 100."""
    rich = Component(
        name="tile",
        base_morphology=("cracked",),
        arrangement=("Grid",),
        material_class=("Tile",),
        surface_properties=("Glossy",),
    )
    components = tuple(
        Component(**{**rich.__dict__, "name": f"tile-{i}"}) for i in range(30)
    )
    result = score_image(SceneAnnotation(SceneType.Composite, "mosaic", components))
    assert result.raw == 30 * 7
    assert result.clipped == MAX_SCORE
    assert result.to_dict()["clipped"] == 100


def test_fixture_batch_scores():
    """Every record in the annotation batch scores as computed by hand."""
    records = parse_annotation_batch((FIXTURES / "annotations.jsonl").read_bytes())
    raws = {record_id: score_image(ann).raw for record_id, ann in records}
    assert raws == {"img-001": 13, "img-002": 11, "img-003": 3}


def test_matches_oracle_on_fixtures(oracle):
    """The app scorer and the brute-force script agree on the fixtures."""
    for name in ("skyscraper.json", "annotations.jsonl"):
        text = (FIXTURES / name).read_text(encoding="utf-8")
        expected = [oracle.score_document(doc) for doc in oracle.iter_documents(text)]
        actual = [score_image(ann).to_dict() for _, ann in parse_annotation_batch(text)]
        assert [a["raw"] for a in actual] == [e["raw"] for e in expected]
        assert [a["clipped"] for a in actual] == [e["clipped"] for e in expected]


def _random_document(rng: np.random.Generator) -> dict:
    def terms() -> list[str]:
        return [str(t) for t in rng.choice(VOCABULARY, size=int(rng.integers(0, 4)))]

    components = []
    for i in range(int(rng.integers(1, 5))):
        components.append(
            {
                "ComponentName": f"part-{i}",
                "DescriptionContent": {
                    "PhysicalStructure": {
                        "BaseMorphology": terms(),
                        "Arrangement": terms(),
                        "Dynamics": terms(),
                    },
                    "MaterialRepresentation": {
                        "MaterialClass": terms(),
                        "SurfaceProperties": terms(),
                    },
                    "GeometricComposition": {
                        "PlanarContour": terms(),
                        "VolumetricForm": terms(),
                    },
                    "SemanticPerception": {
                        "FunctionalInference": terms(),
                        "StyleType": terms(),
                    },
                },
            }
        )
    return {"SceneType": "Composite Scene", "SceneName": "random", "Components": components}


def test_random_annotations_match_oracle(oracle):
    """Ten thousand random annotations score the same under both scorers."""
    rng = np.random.default_rng(20240611)
    for _ in range(10_000):
        doc = _random_document(rng)
        expected = oracle.score_document(doc)
        result = score_image(parse_annotation(json.dumps(doc)))
        assert result.raw == expected["raw"]
        assert result.clipped == expected["clipped"]
        assert 0 <= result.clipped <= MAX_SCORE
        for (_, score), component in zip(result.per_component, expected["per_component"]):
            assert score.to_dict() == {k: component[k] for k in ("s_ps", "s_mr", "s_gc", "s_sp", "total")}


FACET_PATHS = [
    ("PhysicalStructure", "BaseMorphology"),
    ("PhysicalStructure", "Arrangement"),
    ("PhysicalStructure", "Dynamics"),
    ("MaterialRepresentation", "MaterialClass"),
    ("MaterialRepresentation", "SurfaceProperties"),
    ("GeometricComposition", "PlanarContour"),
    ("GeometricComposition", "VolumetricForm"),
    ("SemanticPerception", "FunctionalInference"),
    ("SemanticPerception", "StyleType"),
]


def _raw(doc: dict) -> int:
    return score_image(parse_annotation(json.dumps(doc))).raw


def test_random_annotation_properties():
    """Insertion never lowers the score, N/A changes nothing, components add up."""
    rng = np.random.default_rng(77)
    for _ in range(10_000):
        doc = _random_document(rng)
        result = score_image(parse_annotation(json.dumps(doc)))
        assert result.raw == len(doc["Components"]) + sum(
            score.total for _, score in result.per_component
        )
        assert 0 <= result.clipped <= MAX_SCORE

        index = int(rng.integers(len(doc["Components"])))
        facet, name = FACET_PATHS[int(rng.integers(len(FACET_PATHS)))]
        target = doc["Components"][index]["DescriptionContent"][facet][name]

        target.append("N/A")
        assert _raw(doc) == result.raw

        target.append(str(rng.choice(VOCABULARY)))
        assert _raw(doc) >= result.raw


def test_oracle_cli(oracle, capsys, monkeypatch):
    """The oracle script prints one JSON line per document."""
    monkeypatch.setattr(sys, "argv", ["ista_oracle.py", str(FIXTURES / "skyscraper.json")])
    assert oracle.main() == 0
    lines = capsys.readouterr().out.splitlines()
    assert json.loads(lines[0])["raw"] == 13


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
