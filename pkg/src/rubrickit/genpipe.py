"""Rubric generation pipelines: zero-shot, random few-shot, RubricRAG.

All stochastic choices run through random.Random seeded with a string
of the form "{seed}:{example_id}", which hashes identically across
processes, so per-example selections are reproducible without any
global RNG state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .core import (
    ConversationQuery,
    DatasetExample,
    RubricSet,
    parse_rubric_json,
    render_conversation,
    rubric_set_to_obj,
    strip_reasoning,
)
from .errors import PoolTooSmall, RubricParseError
from .prompts import render_template
from .retrieval import EmbeddingIndex, embed_query, top_k

import random

GENERATION_KINDS = ("zero_shot", "few_shot_random", "rubric_rag")

LARGE_POOL_THRESHOLD = 500


def default_k(pool_size: int) -> int:
    """20 exemplars for large training pools, 5 for small ones."""
    return 20 if pool_size >= LARGE_POOL_THRESHOLD else 5


@dataclass(frozen=True)
class GenerationMode:
    kind: str
    k: int = 0
    seed: int = 0
    thinking: bool = True

    def __post_init__(self):
        if self.kind not in GENERATION_KINDS:
            raise ValueError(f"unknown generation kind {self.kind!r}")
        if self.kind == "zero_shot":
            if self.k != 0:
                raise ValueError("zero_shot takes no exemplars (k must be 0)")
        elif self.k < 1:
            raise ValueError(f"{self.kind} requires k >= 1")


@dataclass(frozen=True)
class Exemplar:
    query: ConversationQuery
    rubrics: RubricSet

    def __post_init__(self):
        if len(self.rubrics) == 0:
            raise ValueError("exemplar rubrics must be non-empty")


def _rng_for(seed: int, example_id: str, purpose: str = "") -> random.Random:
    tag = f"{seed}:{purpose}:{example_id}" if purpose else f"{seed}:{example_id}"
    return random.Random(tag)


def select_exemplars(
    mode: GenerationMode,
    query: ConversationQuery,
    pool: list[DatasetExample],
    index: EmbeddingIndex | None = None,
    client=None,
) -> list[Exemplar]:
    """Pick the in-context exemplars for one query.

    The query's own record is always excluded (leave-one-out).  For
    rubric_rag the most similar exemplar is placed last, nearest to the
    task statement.
    """
    if mode.kind == "zero_shot":
        return []
    candidates = [ex for ex in pool if ex.id != query.id and len(ex.gold_rubrics) > 0]
    if mode.k > len(candidates):
        raise PoolTooSmall(
            f"k={mode.k} exceeds usable pool of {len(candidates)} examples"
        )
    if mode.kind == "few_shot_random":
        chosen = _rng_for(mode.seed, query.id).sample(candidates, mode.k)
    else:
        if index is None or client is None:
            raise ValueError("rubric_rag requires an embedding index and client")
        by_id = {ex.id: ex for ex in candidates}
        not_usable = {e.example_id for e in index.entries if e.example_id not in by_id}
        vector = embed_query(query, client)
        hits = top_k(index, vector, mode.k, exclude_ids=not_usable | {query.id})
        if len(hits) < mode.k:
            raise PoolTooSmall(
                f"k={mode.k} exceeds indexed pool of {len(hits)} candidates"
            )
        chosen = [by_id[hit.example_id] for hit in reversed(hits)]
    return [Exemplar(ex.query, ex.gold_rubrics) for ex in chosen]


def _render_exemplar(position: int, exemplar: Exemplar) -> str:
    rubric_json = json.dumps(
        rubric_set_to_obj(exemplar.rubrics), ensure_ascii=False, indent=2
    )
    return render_template(
        "exemplar_block",
        {
            "Index": str(position),
            "ExemplarQuery": render_conversation(exemplar.query),
            "ExemplarRubrics": rubric_json,
        },
    )


def build_generation_prompt(
    query: ConversationQuery, exemplars: list[Exemplar]
) -> list[dict]:
    """System + user messages; zero exemplars renders the bare template."""
    blocks = "".join(
        _render_exemplar(i, ex) for i, ex in enumerate(exemplars, start=1)
    )
    user = render_template(
        "generation_user",
        {"Exemplars": blocks, "Query": render_conversation(query)},
    )
    return [
        {"role": "system", "content": render_template("generation_system", {})},
        {"role": "user", "content": user},
    ]


@dataclass
class GenerationResult:
    id: str
    mode: str
    exemplar_ids: list[str]
    raw_text: str
    rubrics: RubricSet
    parse_status: str  # ok | recovered | failed


def classify_and_parse(raw_text: str) -> tuple[RubricSet, str]:
    """Parse model output, labeling how much recovery it needed."""
    stripped = strip_reasoning(raw_text)
    try:
        return parse_rubric_json(stripped, mode="strict"), "ok"
    except RubricParseError:
        pass
    try:
        return parse_rubric_json(raw_text, mode="lenient"), "recovered"
    except RubricParseError:
        return RubricSet(), "failed"


def generate_rubrics(
    query: ConversationQuery,
    mode: GenerationMode,
    pool: list[DatasetExample],
    client,
    index: EmbeddingIndex | None = None,
) -> GenerationResult:
    exemplars = select_exemplars(mode, query, pool, index=index, client=client)
    messages = build_generation_prompt(query, exemplars)
    raw_text = client.chat(messages, extra={client.thinking_key: mode.thinking})
    rubrics, parse_status = classify_and_parse(raw_text)
    return GenerationResult(
        id=query.id,
        mode=mode.kind,
        exemplar_ids=[ex.query.id for ex in exemplars],
        raw_text=raw_text,
        rubrics=rubrics,
        parse_status=parse_status,
    )


def choose_foreign_rubrics(
    example: DatasetExample, pool: list[DatasetExample], seed: int = 0
) -> tuple[str, RubricSet]:
    """Rubrics of a different, seeded-random pool example."""
    others = [ex for ex in pool if ex.id != example.id and len(ex.gold_rubrics) > 0]
    if not others:
        raise PoolTooSmall("no other example to borrow rubrics from")
    donor = _rng_for(seed, example.id, purpose="bad").choice(others)
    return donor.id, donor.gold_rubrics


def generate_bad_response(
    query: ConversationQuery, foreign_rubrics: RubricSet, client
) -> str:
    """Answer the query while steering to another query's rubrics."""
    rubric_json = json.dumps(
        rubric_set_to_obj(foreign_rubrics), ensure_ascii=False, indent=2
    )
    prompt = render_template(
        "bad_response",
        {"Conversation": render_conversation(query), "Rubrics": rubric_json},
    )
    return client.chat([{"role": "user", "content": prompt}])


def generation_result_to_record(result: GenerationResult) -> dict:
    return {
        "id": result.id,
        "mode": result.mode,
        "exemplar_ids": result.exemplar_ids,
        "raw_text": result.raw_text,
        "rubrics": rubric_set_to_obj(result.rubrics)["rubrics"],
        "parse_status": result.parse_status,
    }
