"""Response grading with rubrics and the granularity harness.

Each criterion is judged in its own prompt with a binary yes/no
verdict; satisfied points are summed and normalized by the sum of the
positive points.  Normalized scores can go negative — a response that
trips only penalty criteria scores below zero — and are not clipped
unless explicitly requested.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import ConversationQuery, Criterion, DatasetExample, RubricSet, render_conversation
from .errors import (
    MissingCollection,
    MissingCompletion,
    NoPositivePoints,
    UnparseableJudgment,
)
from .prompts import render_template
from .textsim import RETRY_NUDGE, first_int_in_range

GRANULARITIES = ("none", "axis", "cluster", "instance")

_YES_NO_RE = re.compile(r"^\s*(yes|no)\b", re.IGNORECASE)


def parse_yes_no(reply: str) -> bool | None:
    match = _YES_NO_RE.match(reply)
    if match is None:
        return None
    return match.group(1).lower() == "yes"


def _chat_with_retry(client, prompt: str, parse):
    """One call, then one nudged retry; the nudge changes the request
    body so a cached unparseable reply is not replayed verbatim."""
    messages = [{"role": "user", "content": prompt}]
    reply = client.chat(messages)
    value = parse(reply)
    if value is None:
        retry = messages + [
            {"role": "assistant", "content": reply},
            {"role": "user", "content": RETRY_NUDGE},
        ]
        reply = client.chat(retry)
        value = parse(reply)
        if value is None:
            raise UnparseableJudgment(f"unusable judge reply after retry: {reply[:200]!r}")
    return value


def grade_criterion(
    query: ConversationQuery, response: str, criterion: Criterion, client
) -> bool:
    prompt = render_template(
        "criterion_grading",
        {
            "Conversation": render_conversation(query),
            "Response": response,
            "Criterion": criterion.text,
        },
    )
    return _chat_with_retry(client, prompt, parse_yes_no)


@dataclass(frozen=True)
class CriterionGrade:
    criterion: str
    points: int
    satisfied: bool


@dataclass(frozen=True)
class GradeResult:
    per_criterion: tuple[CriterionGrade, ...]
    raw_points: int
    positive_total: int
    normalized: float


def grade_response(
    query: ConversationQuery,
    response: str,
    rubrics: RubricSet,
    client,
    clip: bool = False,
) -> GradeResult:
    """Grade every criterion independently and aggregate.

    normalized = (sum of satisfied points) / (sum of positive points);
    clip=True clamps it into [0, 1] for parity studies.
    """
    positive_total = rubrics.positive_total()
    if positive_total <= 0:
        raise NoPositivePoints(
            f"rubrics for query {query.id!r} carry no positive points"
        )
    grades = []
    for criterion in rubrics:
        satisfied = grade_criterion(query, response, criterion, client)
        grades.append(
            CriterionGrade(criterion.text, criterion.points, satisfied)
        )
    raw_points = sum(g.points for g in grades if g.satisfied)
    normalized = raw_points / positive_total
    if clip:
        normalized = min(1.0, max(0.0, normalized))
    return GradeResult(
        per_criterion=tuple(grades),
        raw_points=raw_points,
        positive_total=positive_total,
        normalized=normalized,
    )


def grade_no_rubric(query: ConversationQuery, response: str, client) -> float:
    """Single scalar judgment on a 0-10 scale, normalized to [0,1]."""
    prompt = render_template(
        "scalar_scoring",
        {"Conversation": render_conversation(query), "Response": response},
    )
    value = _chat_with_retry(
        client, prompt, lambda reply: first_int_in_range(reply, 0, 10)
    )
    return value / 10.0


@dataclass
class ScoreRow:
    id: str
    granularity: str
    label: str
    normalized: float
    raw_points: int | None
    positive_total: int | None
    per_criterion: list[dict]


@dataclass
class ScoreTable:
    granularity: str
    label: str
    rows: list[ScoreRow] = field(default_factory=list)
    skipped_no_positive: list[str] = field(default_factory=list)

    def scores_by_id(self) -> dict[str, float]:
        return {row.id: row.normalized for row in self.rows}


def _rubrics_for(
    example: DatasetExample,
    granularity: str,
    rubrics_override: dict[str, RubricSet] | None,
) -> RubricSet:
    if granularity == "instance":
        if rubrics_override is not None:
            if example.id not in rubrics_override:
                raise MissingCollection(
                    f"no generated rubrics supplied for example {example.id!r}"
                )
            return rubrics_override[example.id]
        return example.gold_rubrics
    try:
        return example.named_rubric_collections[granularity]
    except KeyError:
        raise MissingCollection(
            f"example {example.id!r} has no {granularity!r} rubric collection"
        )


def run_granularity_suite(
    examples: list[DatasetExample],
    granularity: str,
    response_label: str,
    client,
    rubrics_override: dict[str, RubricSet] | None = None,
    clip: bool = False,
) -> ScoreTable:
    """Score one labeled completion of every example at one granularity.

    Judge-call budget per example: 1 for none, |collection| otherwise.
    Examples whose rubrics carry no positive points are skipped and
    listed, not scored.  rubrics_override swaps generated rubrics in
    for gold at instance granularity, keyed by example id.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {granularity!r}")
    table = ScoreTable(granularity=granularity, label=response_label)
    for example in examples:
        if response_label not in example.completions:
            raise MissingCompletion(
                f"example {example.id!r} has no completion labeled {response_label!r}"
            )
        response = example.completions[response_label]
        if granularity == "none":
            score = grade_no_rubric(example.query, response, client)
            table.rows.append(
                ScoreRow(
                    id=example.id,
                    granularity=granularity,
                    label=response_label,
                    normalized=score,
                    raw_points=None,
                    positive_total=None,
                    per_criterion=[],
                )
            )
            continue
        rubrics = _rubrics_for(example, granularity, rubrics_override)
        try:
            result = grade_response(example.query, response, rubrics, client, clip=clip)
        except NoPositivePoints:
            table.skipped_no_positive.append(example.id)
            continue
        table.rows.append(
            ScoreRow(
                id=example.id,
                granularity=granularity,
                label=response_label,
                normalized=result.normalized,
                raw_points=result.raw_points,
                positive_total=result.positive_total,
                per_criterion=[
                    {"criterion": g.criterion, "satisfied": g.satisfied}
                    for g in result.per_criterion
                ],
            )
        )
    return table


def score_row_to_record(row: ScoreRow) -> dict:
    return {
        "id": row.id,
        "granularity": row.granularity,
        "label": row.label,
        "normalized": row.normalized,
        "raw_points": row.raw_points,
        "positive_total": row.positive_total,
        "per_criterion": row.per_criterion,
    }
