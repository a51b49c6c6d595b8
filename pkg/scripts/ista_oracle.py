#!/usr/bin/env python3
"""
Brute-force structure-texture scorer for cross-checking the app scorer.

Reads structural annotation JSON (one document, an array, or JSONL) and walks
every facet list directly: texture weights come from a table written out here
rather than from the app lexicon, and every non-"N/A" entry of a counted
facet adds one point. Prints one JSON line per annotation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Iterable

WEIGHTS: dict[str, int] = {}
for _term in (
    "smooth plain uniform lined grid striped chequered dotted freckled".split()
):
    WEIGHTS[_term] = 1
for _term in (
    "braided woven crosshatched meshed cobwebbed lacelike knitted spiralled swirly".split()
):
    WEIGHTS[_term] = 2
for _term in (
    "bumpy blotchy bubbly cracked crystalline flecked frilly grooved honeycombed "
    "marbled matted paisley perforated pitted pleated porous scaly smeared "
    "sprinkled stratified studded veined wrinkled zigzagged"
).split():
    WEIGHTS[_term] = 3

COUNTED: dict[str, list[tuple[str, str]]] = {
    "s_ps": [("PhysicalStructure", "Arrangement")],
    "s_mr": [
        ("MaterialRepresentation", "MaterialClass"),
        ("MaterialRepresentation", "SurfaceProperties"),
    ],
    "s_gc": [
        ("GeometricComposition", "PlanarContour"),
        ("GeometricComposition", "VolumetricForm"),
    ],
    "s_sp": [
        ("SemanticPerception", "FunctionalInference"),
        ("SemanticPerception", "StyleType"),
    ],
}
CLIP: int = 100


def is_na(value: Any) -> bool:
    return str(value).strip().casefold() == "n/a"


def facet(description: dict[str, Any], group: str, key: str) -> list[Any]:
    return list((description.get(group) or {}).get(key) or [])


def score_description(description: dict[str, Any]) -> dict[str, int]:
    scores = {name: 0 for name in COUNTED}
    for term in facet(description, "PhysicalStructure", "BaseMorphology"):
        if is_na(term):
            continue
        scores["s_ps"] += WEIGHTS.get(str(term).strip().casefold(), 0)
    for name, locations in COUNTED.items():
        for group, key in locations:
            for value in facet(description, group, key):
                if not is_na(value):
                    scores[name] += 1
    scores["total"] = scores["s_ps"] + scores["s_mr"] + scores["s_gc"] + scores["s_sp"]
    return scores


def score_document(doc: dict[str, Any]) -> dict[str, Any]:
    components = doc.get("Components") or []
    if components:
        parts = [
            (c.get("ComponentName"), score_description(c.get("DescriptionContent") or {}))
            for c in components
        ]
    elif doc.get("DescriptionContent"):
        parts = [(doc.get("SceneName"), score_description(doc["DescriptionContent"]))]
    else:
        raise ValueError("annotation has nothing to score")

    raw = len(parts) + sum(p["total"] for _, p in parts)
    return {
        "raw": raw,
        "clipped": min(raw, CLIP),
        "per_component": [{"name": name, **p} for name, p in parts],
    }


def iter_documents(text: str) -> Iterable[dict[str, Any]]:
    stripped = text.strip()
    try:
        whole = json.loads(stripped)
    except json.JSONDecodeError:
        whole = None
    if isinstance(whole, dict):
        yield whole
        return
    if isinstance(whole, list):
        yield from whole
        return
    for line in text.splitlines():
        if line.strip():
            yield json.loads(line)


def main() -> int:
    parser = argparse.ArgumentParser(
        description="Score structural annotations by brute force over every facet."
    )
    parser.add_argument("input", help="Annotation JSON or JSONL file")
    args = parser.parse_args()

    input_path = Path(args.input)
    if not input_path.exists():
        raise SystemExit(f"Input file not found: {input_path}")

    for index, doc in enumerate(iter_documents(input_path.read_text(encoding="utf-8")), 1):
        result = {"id": str(doc.get("id", index)), **score_document(doc)}
        sys.stdout.write(json.dumps(result, ensure_ascii=False) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
