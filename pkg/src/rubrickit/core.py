"""Core data model and rubric JSON parsing.

A rubric is an unordered set of criteria; each criterion pairs a
natural-language requirement with a signed integer point value.  The
canonical wire schema for a rubric set is::

    {"rubrics": [{"criterion": "<text>", "points": <int>}, ...]}

Parsing is strict by default.  Lenient mode applies exactly two recovery
steps (remove reasoning blocks, remove markdown code fences) followed by
one balanced-object extraction; there is no JSON repair, so parse
outcomes stay reproducible.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import EmptyAfterStrip, MalformedJson, SchemaViolation

VALID_ROLES = ("user", "assistant", "system")

DEFAULT_REASONING_MARKERS = ("<think>", "</think>")

_FENCE_LINE_RE = re.compile(r"^\s*```[\w-]*\s*$", re.MULTILINE)


@dataclass(frozen=True)
class Criterion:
    """One gradeable requirement with a signed integer point value."""

    text: str
    points: int
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValueError("criterion text must be non-empty after trimming")
        if isinstance(self.points, bool) or not isinstance(self.points, int):
            raise ValueError(f"criterion points must be an integer, got {self.points!r}")
        object.__setattr__(self, "tags", tuple(self.tags))


@dataclass(frozen=True)
class RubricSet:
    """Ordered list of criteria; order is kept for reporting only.

    All metrics treat the contents as a set.  Duplicates are preserved
    (redundancy metrics need to observe them).  An empty set is legal
    and, in practice, arises from failed lenient parses of model output.
    """

    criteria: tuple[Criterion, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "criteria", tuple(self.criteria))

    def __len__(self) -> int:
        return len(self.criteria)

    def __iter__(self):
        return iter(self.criteria)

    def texts(self) -> list[str]:
        return [c.text for c in self.criteria]

    def positive_total(self) -> int:
        return sum(c.points for c in self.criteria if c.points > 0)


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in VALID_ROLES:
            raise ValueError(f"message role must be one of {VALID_ROLES}, got {self.role!r}")


@dataclass(frozen=True)
class ConversationQuery:
    """A user query as an ordered, role-tagged conversation."""

    id: str
    messages: tuple[Message, ...]

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("conversation must contain at least one message")

    def ends_with_user_turn(self) -> bool:
        return self.messages[-1].role == "user"


@dataclass
class DatasetExample:
    """One dataset record: query, gold rubrics, labeled completions."""

    query: ConversationQuery
    gold_rubrics: RubricSet
    completions: dict[str, str] = field(default_factory=dict)
    split: str = ""
    named_rubric_collections: dict[str, RubricSet] = field(default_factory=dict)

    @property
    def id(self) -> str:
        return self.query.id


def render_conversation(query: ConversationQuery) -> str:
    """Flatten a conversation to role-prefixed lines, in message order."""
    return "\n".join(f"{m.role}: {m.content}" for m in query.messages)


def strip_reasoning(text: str, markers: tuple[str, str] = DEFAULT_REASONING_MARKERS) -> str:
    """Remove reasoning blocks delimited by the marker pair.

    Depth-tracking: an open marker inside a block nests, so an outer
    block left unmatched removes everything from its open marker to the
    end of the text.  Close markers outside any block pass through.
    Idempotent.
    """
    open_m, close_m = markers
    out: list[str] = []
    pos = 0
    n = len(text)
    while pos < n:
        start = text.find(open_m, pos)
        if start == -1:
            out.append(text[pos:])
            break
        out.append(text[pos:start])
        depth = 1
        cursor = start + len(open_m)
        while depth > 0 and cursor < n:
            next_open = text.find(open_m, cursor)
            next_close = text.find(close_m, cursor)
            if next_close == -1:
                cursor = n  # unmatched: drop through end of text
                depth = 0
                break
            if next_open != -1 and next_open < next_close:
                depth += 1
                cursor = next_open + len(open_m)
            else:
                depth -= 1
                cursor = next_close + len(close_m)
        pos = cursor
    return "".join(out)


def strip_code_fences(text: str) -> str:
    """Remove markdown fence marker lines (``` or ```lang), keeping payloads."""
    return _FENCE_LINE_RE.sub("", text)


def _extract_first_object(text: str) -> str:
    """Return the first balanced {...} span, honoring string literals."""
    start = text.find("{")
    if start == -1:
        raise MalformedJson("no JSON object found", offset=0)
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    raise MalformedJson("unbalanced JSON object", offset=start)


def _parse_strict(text: str) -> RubricSet:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(exc.msg, offset=exc.pos) from exc
    if not isinstance(payload, dict):
        raise SchemaViolation("top level must be a JSON object")
    if set(payload.keys()) != {"rubrics"}:
        extra = sorted(set(payload.keys()) - {"rubrics"})
        if extra:
            raise SchemaViolation(f"unexpected top-level field(s) {extra}", field=extra[0])
        raise SchemaViolation("missing top-level field", field="rubrics")
    items = payload["rubrics"]
    if not isinstance(items, list):
        raise SchemaViolation("'rubrics' must be an array", field="rubrics")
    criteria: list[Criterion] = []
    for idx, item in enumerate(items):
        where = f"rubrics[{idx}]"
        if not isinstance(item, dict):
            raise SchemaViolation("rubric entries must be objects", field=where)
        keys = set(item.keys())
        if keys != {"criterion", "points"}:
            extra = sorted(keys - {"criterion", "points"})
            if extra:
                raise SchemaViolation(f"extra field {extra[0]!r}", field=f"{where}.{extra[0]}")
            missing = sorted({"criterion", "points"} - keys)
            raise SchemaViolation(f"missing field {missing[0]!r}", field=f"{where}.{missing[0]}")
        crit_text = item["criterion"]
        points = item["points"]
        if not isinstance(crit_text, str) or not crit_text.strip():
            raise SchemaViolation("'criterion' must be a non-empty string", field=f"{where}.criterion")
        if isinstance(points, bool) or not isinstance(points, int):
            raise SchemaViolation("non-integer points", field=f"{where}.points")
        criteria.append(Criterion(text=crit_text, points=points))
    return RubricSet(tuple(criteria))


def parse_rubric_json(
    raw_text: str,
    mode: str = "strict",
    reasoning_markers: tuple[str, str] = DEFAULT_REASONING_MARKERS,
) -> RubricSet:
    """Parse model output into a RubricSet.

    strict: the text must be exactly one JSON object matching the rubric
    schema (single key "rubrics"; entries carry exactly "criterion" and
    "points" with integer points).

    lenient: strip reasoning blocks, strip markdown fences, extract the
    first balanced JSON object, then apply the strict schema to it.

    Raises MalformedJson, SchemaViolation or EmptyAfterStrip.
    """
    if mode == "strict":
        return _parse_strict(raw_text)
    if mode != "lenient":
        raise ValueError(f"unknown parse mode {mode!r}")
    stripped = strip_code_fences(strip_reasoning(raw_text, reasoning_markers))
    if not stripped.strip():
        raise EmptyAfterStrip("no content after removing reasoning blocks and fences")
    return _parse_strict(_extract_first_object(stripped))


def rubric_set_to_obj(rubrics: RubricSet, include_tags: bool = False) -> dict:
    """Rubric set as the canonical JSON object (criterion + points only,
    unless tags are explicitly requested for dataset records)."""
    items = []
    for c in rubrics:
        entry: dict = {"criterion": c.text, "points": c.points}
        if include_tags and c.tags:
            entry["tags"] = list(c.tags)
        items.append(entry)
    return {"rubrics": items}


def serialize_rubric_set(rubrics: RubricSet, indent: int | None = None) -> str:
    """Serialize to the canonical output schema; reparses to an equal set."""
    return json.dumps(rubric_set_to_obj(rubrics), ensure_ascii=False, indent=indent)
