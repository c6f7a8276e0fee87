"""Dense-embedding retrieval over dataset queries.

Exhaustive cosine search over a flat index: pools are thousands of
queries at most, and exact neighbors keep the exemplar-selection tests
oracle-checkable.  Vectors are rounded to 9 significant digits at build
time so that a save/load round trip reproduces the index bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .core import ConversationQuery, DatasetExample, render_conversation
from .errors import DimensionMismatch, ZeroVector

META_FILENAME = "index.meta.json"
ENTRIES_FILENAME = "index.jsonl"


def _round_vector(vector) -> tuple[float, ...]:
    return tuple(float(f"{float(x):.9g}") for x in vector)


@dataclass(frozen=True)
class IndexEntry:
    example_id: str
    vector: tuple[float, ...]
    norm: float


@dataclass(frozen=True)
class EmbeddingIndex:
    entries: tuple[IndexEntry, ...]
    dimension: int
    embedder_id: str


@dataclass(frozen=True)
class RetrievalHit:
    example_id: str
    score: float


def query_embedding_text(query: ConversationQuery, final_turn_only: bool = False) -> str:
    if final_turn_only:
        last = query.messages[-1]
        return f"{last.role}: {last.content}"
    return render_conversation(query)


def embed_query(query: ConversationQuery, client, final_turn_only: bool = False) -> list[float]:
    return client.embeddings([query_embedding_text(query, final_turn_only)])[0]


def _make_entry(example_id: str, vector) -> IndexEntry:
    rounded = _round_vector(vector)
    norm = math.sqrt(math.fsum(x * x for x in rounded))
    if norm == 0.0:
        raise ZeroVector(f"zero embedding vector for example {example_id!r}")
    return IndexEntry(example_id=example_id, vector=rounded, norm=norm)


def build_index(
    dataset: list[DatasetExample],
    client,
    embedder_id: str = "",
    final_turn_only: bool = False,
) -> EmbeddingIndex:
    """Embed every example's query, in dataset order.

    Embedding requests go through the client's per-text cache, so an
    aborted build resumes from where it stopped instead of re-paying
    completed calls.
    """
    if not dataset:
        raise ValueError("cannot build an index from an empty dataset")
    texts = [query_embedding_text(ex.query, final_turn_only) for ex in dataset]
    vectors = client.embeddings(texts)
    entries = [
        _make_entry(ex.id, vector) for ex, vector in zip(dataset, vectors)
    ]
    dims = {len(e.vector) for e in entries}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed embedding dimensions {sorted(dims)}")
    return EmbeddingIndex(
        entries=tuple(entries),
        dimension=dims.pop(),
        embedder_id=embedder_id,
    )


def save_index(index: EmbeddingIndex, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "dimension": index.dimension,
        "embedder_id": index.embedder_id,
        "count": len(index.entries),
    }
    (directory / META_FILENAME).write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with open(directory / ENTRIES_FILENAME, "w", encoding="utf-8") as fh:
        for entry in index.entries:
            record = {"id": entry.example_id, "vector": list(entry.vector)}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_index(directory: str | Path) -> EmbeddingIndex:
    directory = Path(directory)
    meta = json.loads((directory / META_FILENAME).read_text(encoding="utf-8"))
    entries = []
    with open(directory / ENTRIES_FILENAME, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            entries.append(_make_entry(record["id"], record["vector"]))
    if len(entries) != meta["count"]:
        raise ValueError(
            f"index corrupt: {len(entries)} entries, metadata says {meta['count']}"
        )
    for entry in entries:
        if len(entry.vector) != meta["dimension"]:
            raise DimensionMismatch(
                f"entry {entry.example_id!r} has dimension {len(entry.vector)}, "
                f"index declares {meta['dimension']}"
            )
    return EmbeddingIndex(
        entries=tuple(entries),
        dimension=meta["dimension"],
        embedder_id=meta["embedder_id"],
    )


def top_k(
    index: EmbeddingIndex,
    query_vector,
    k: int,
    exclude_ids=frozenset(),
) -> list[RetrievalHit]:
    """Best cosine matches, score descending, ties by id ascending."""
    if k < 1:
        raise ValueError("k must be >= 1")
    vector = tuple(float(x) for x in query_vector)
    if len(vector) != index.dimension:
        raise DimensionMismatch(
            f"query dimension {len(vector)} != index dimension {index.dimension}"
        )
    query_norm = math.sqrt(math.fsum(x * x for x in vector))
    if query_norm == 0.0:
        raise ZeroVector("zero query vector")
    exclude = set(exclude_ids)
    hits = []
    for entry in index.entries:
        if entry.example_id in exclude:
            continue
        dot = math.fsum(a * b for a, b in zip(vector, entry.vector))
        hits.append(RetrievalHit(entry.example_id, dot / (query_norm * entry.norm)))
    hits.sort(key=lambda hit: (-hit.score, hit.example_id))
    return hits[:k]
