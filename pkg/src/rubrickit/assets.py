"""Shared rubric collections for the granularity harness.

Axis and cluster rubric sets are corpus-level artifacts supplied as
editable JSON asset files in the standard rubric schema.  Loading
validates the expected sizes (5 axes, 37 clusters) and attaches the
same RubricSet object to every example by reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .core import Criterion, DatasetExample, RubricSet
from .errors import MalformedJson, SchemaViolation, SizeMismatch

EXPECTED_SIZES = {"axis": 5, "cluster": 37}


@dataclass(frozen=True)
class RubricCollection:
    name: str
    rubrics: RubricSet
    expected_size: int | None = None

    def __post_init__(self):
        if self.expected_size is not None and len(self.rubrics) != self.expected_size:
            raise SizeMismatch(
                f"collection {self.name!r} has {len(self.rubrics)} rubrics, "
                f"expected {self.expected_size}"
            )


def load_collection(path: str | Path, name: str) -> RubricCollection:
    """Read a collection asset file.

    Same shape as model rubric output, but asset files may omit
    "points" (default 1, matching shared rubrics that only mark
    presence) and may carry "tags".
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"{path}: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(payload, dict) or "rubrics" not in payload:
        raise SchemaViolation(f"{path}: expected a top-level 'rubrics' array", field="rubrics")
    items = payload["rubrics"]
    if not isinstance(items, list):
        raise SchemaViolation(f"{path}: 'rubrics' must be an array", field="rubrics")
    criteria = []
    for idx, item in enumerate(items):
        if not isinstance(item, dict) or "criterion" not in item:
            raise SchemaViolation(
                f"{path}: rubrics[{idx}] must be an object with 'criterion'",
                field=f"rubrics[{idx}]",
            )
        points = item.get("points", 1)
        if isinstance(points, bool) or not isinstance(points, int):
            raise SchemaViolation(
                f"{path}: rubrics[{idx}] has non-integer points",
                field=f"rubrics[{idx}].points",
            )
        tags = item.get("tags", [])
        criteria.append(Criterion(text=item["criterion"], points=points, tags=tuple(tags)))
    return RubricCollection(
        name=name,
        rubrics=RubricSet(tuple(criteria)),
        expected_size=EXPECTED_SIZES.get(name),
    )


def attach_collections(
    examples: list[DatasetExample], collections: dict[str, RubricCollection]
) -> None:
    """Share each collection's RubricSet across all examples in place."""
    for example in examples:
        for name, collection in collections.items():
            example.named_rubric_collections[name] = collection.rubrics
