"""Dataset ingestion: canonical JSONL with optional field mapping.

Canonical record shape (one JSON object per line)::

    {"id": "...",
     "messages": [{"role": "user", "content": "..."}, ...],
     "rubrics": [{"criterion": "...", "points": 3, "tags": ["axis:accuracy"]}, ...],
     "completions": {"label": "response text", ...},      # optional
     "split": "train",                                     # optional
     "collections": {"name": [{"criterion": ..., "points": ...}]}}  # optional

External corpora that use different key names (or nest completions
inside per-record structures) are adapted through a FieldMapping rather
than ad-hoc preprocessing scripts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .core import (
    ConversationQuery,
    Criterion,
    DatasetExample,
    Message,
    RubricSet,
    rubric_set_to_obj,
)
from .errors import LineError, ValidationFailed


@dataclass(frozen=True)
class FieldMapping:
    """Key renames applied to each raw record before validation.

    completion_paths maps a completion label to a dotted path into the
    raw record (list indices allowed, e.g. "responses.0.text"); this
    covers corpora that store candidate responses in nested objects.
    When empty, the canonical "completions" object is used as-is.
    """

    id_field: str = "id"
    messages_field: str = "messages"
    rubrics_field: str = "rubrics"
    criterion_field: str = "criterion"
    points_field: str = "points"
    tags_field: str = "tags"
    completions_field: str = "completions"
    split_field: str = "split"
    collections_field: str = "collections"
    completion_paths: dict[str, str] = field(default_factory=dict)


def _walk_path(record: dict, dotted: str):
    """Follow a dotted path; integer segments index into lists."""
    node = record
    for seg in dotted.split("."):
        if isinstance(node, list):
            node = node[int(seg)]
        elif isinstance(node, dict):
            node = node[seg]
        else:
            raise KeyError(seg)
    return node


def _parse_criteria(items, mapping: FieldMapping, where: str) -> RubricSet:
    if not isinstance(items, list):
        raise ValueError(f"{where} must be an array")
    criteria = []
    for idx, item in enumerate(items):
        if not isinstance(item, dict):
            raise ValueError(f"{where}[{idx}] must be an object")
        text = item.get(mapping.criterion_field)
        points = item.get(mapping.points_field)
        tags = item.get(mapping.tags_field, [])
        if not isinstance(text, str) or not text.strip():
            raise ValueError(f"{where}[{idx}]: criterion must be a non-empty string")
        if isinstance(points, bool) or not isinstance(points, int):
            raise ValueError(f"{where}[{idx}]: points must be an integer")
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise ValueError(f"{where}[{idx}]: tags must be an array of strings")
        criteria.append(Criterion(text=text, points=points, tags=tuple(tags)))
    return RubricSet(tuple(criteria))


def _parse_record(record: dict, mapping: FieldMapping) -> DatasetExample:
    ex_id = record.get(mapping.id_field)
    if not isinstance(ex_id, str) or not ex_id:
        raise ValueError("id must be a non-empty string")

    raw_messages = record.get(mapping.messages_field)
    if not isinstance(raw_messages, list) or not raw_messages:
        raise ValueError("messages must be a non-empty array")
    messages = []
    for idx, msg in enumerate(raw_messages):
        if not isinstance(msg, dict):
            raise ValueError(f"messages[{idx}] must be an object")
        role = msg.get("role")
        content = msg.get("content")
        if not isinstance(content, str):
            raise ValueError(f"messages[{idx}]: content must be a string")
        try:
            messages.append(Message(role=role, content=content))
        except ValueError as exc:
            raise ValueError(f"messages[{idx}]: {exc}") from exc

    rubrics = _parse_criteria(record.get(mapping.rubrics_field, []), mapping, "rubrics")

    completions: dict[str, str] = {}
    if mapping.completion_paths:
        for label, dotted in mapping.completion_paths.items():
            try:
                value = _walk_path(record, dotted)
            except (KeyError, IndexError, ValueError):
                continue  # absent path: label simply not present for this record
            if not isinstance(value, str):
                raise ValueError(f"completion path {dotted!r} must resolve to a string")
            completions[label] = value
    else:
        raw_completions = record.get(mapping.completions_field, {})
        if not isinstance(raw_completions, dict):
            raise ValueError("completions must be an object")
        for label, text in raw_completions.items():
            if not isinstance(text, str):
                raise ValueError(f"completions[{label!r}] must be a string")
            completions[label] = text

    split = record.get(mapping.split_field, "")
    if not isinstance(split, str):
        raise ValueError("split must be a string")

    collections: dict[str, RubricSet] = {}
    raw_collections = record.get(mapping.collections_field, {})
    if not isinstance(raw_collections, dict):
        raise ValueError("collections must be an object")
    for name, items in raw_collections.items():
        collections[name] = _parse_criteria(items, mapping, f"collections[{name!r}]")

    return DatasetExample(
        query=ConversationQuery(id=ex_id, messages=tuple(messages)),
        gold_rubrics=rubrics,
        completions=completions,
        split=split,
        named_rubric_collections=collections,
    )


@dataclass
class IngestResult:
    examples: list[DatasetExample]
    errors: list[LineError]

    @property
    def ok(self) -> bool:
        return not self.errors


def ingest_dataset(
    path: str | Path,
    mapping: FieldMapping | None = None,
    strict: bool = False,
) -> IngestResult:
    """Read a JSONL dataset, validating every line.

    Bad lines are collected as LineError records (1-based line numbers);
    the scan always runs to the end of the file so one report covers all
    problems.  With strict=True a non-empty error list raises
    ValidationFailed after the full scan.  Duplicate ids are errors.
    """
    mapping = mapping or FieldMapping()
    examples: list[DatasetExample] = []
    errors: list[LineError] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(LineError(line_number, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(record, dict):
                errors.append(LineError(line_number, "record must be a JSON object"))
                continue
            try:
                example = _parse_record(record, mapping)
            except ValueError as exc:
                errors.append(LineError(line_number, str(exc)))
                continue
            if example.id in seen_ids:
                errors.append(LineError(line_number, f"duplicate id {example.id!r}"))
                continue
            seen_ids.add(example.id)
            examples.append(example)
    result = IngestResult(examples=examples, errors=errors)
    if strict and errors:
        raise ValidationFailed(errors)
    return result


def example_to_record(example: DatasetExample) -> dict:
    record: dict = {
        "id": example.id,
        "messages": [{"role": m.role, "content": m.content} for m in example.query.messages],
        "rubrics": rubric_set_to_obj(example.gold_rubrics, include_tags=True)["rubrics"],
    }
    if example.completions:
        record["completions"] = dict(example.completions)
    if example.split:
        record["split"] = example.split
    if example.named_rubric_collections:
        record["collections"] = {
            name: rubric_set_to_obj(rs, include_tags=True)["rubrics"]
            for name, rs in example.named_rubric_collections.items()
        }
    return record


def write_dataset(path: str | Path, examples: Iterable[DatasetExample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for example in examples:
            fh.write(json.dumps(example_to_record(example), ensure_ascii=False) + "\n")
