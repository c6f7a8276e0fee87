"""Deterministic test backends.

MockClient replays scripted replies and records every call; an
unscripted request is an error, never a silent fallback.
KeywordMockClient is a fully deterministic stand-in for a real model:
it dispatches on which frozen template produced the prompt and answers
from `kw...` marker tokens, which lets entire pipelines run end to end
with zero network and predictable outcomes.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading

from .client import LlmClient
from .errors import UnscriptedRequest

KW_TOKEN_RE = re.compile(r"kw\w*")


def hash_embedding(text: str, dim: int = 8) -> list[float]:
    """Deterministic pseudo-embedding: sha256 bytes mapped to [-1, 1)."""
    values: list[float] = []
    seed = hashlib.sha256(text.encode("utf-8")).digest()
    block = seed
    counter = 0
    while len(values) < dim:
        for i in range(0, len(block) - 3, 4):
            if len(values) >= dim:
                break
            chunk = int.from_bytes(block[i : i + 4], "big")
            values.append(chunk / 2**31 - 1.0)
        counter += 1
        block = hashlib.sha256(seed + counter.to_bytes(4, "big")).digest()
    if all(v == 0.0 for v in values):
        values[0] = 1.0
    return values


class MockClient(LlmClient):
    """Scripted backend: exact prompt-fingerprint map and/or a responder.

    The fingerprint of a chat request is the message contents joined
    with newlines.  Resolution order: responder callable first (may
    return None to decline), then the script map; anything unresolved
    raises UnscriptedRequest.
    """

    max_workers = 1

    def __init__(
        self,
        script: dict[str, str] | None = None,
        responder=None,
        embedder=None,
        embed_dim: int = 8,
        model_id: str = "mock",
    ):
        self.script = dict(script or {})
        self.responder = responder
        self.embedder = embedder
        self.embed_dim = embed_dim
        self.model_id = model_id
        self.calls: list[dict] = []
        self._lock = threading.Lock()

    @property
    def cache_identity(self) -> dict:
        return {"backend": "mock", "model": self.model_id}

    @staticmethod
    def fingerprint(messages: list[dict]) -> str:
        return "\n".join(m["content"] for m in messages)

    def _record(self, record: dict) -> None:
        with self._lock:
            self.calls.append(record)

    def _resolve(self, messages: list[dict]) -> str:
        text = self.fingerprint(messages)
        if self.responder is not None:
            reply = self.responder(messages)
            if reply is not None:
                return reply
        if text in self.script:
            return self.script[text]
        raise UnscriptedRequest(f"no scripted reply for prompt: {text[:160]!r}")

    def chat(self, messages: list[dict], extra: dict | None = None) -> str:
        reply = self._resolve(messages)
        self._record(
            {"endpoint": "chat", "messages": messages, "extra": extra or {}, "reply": reply}
        )
        return reply

    def embeddings(self, texts: list[str]) -> list[list[float]]:
        if self.embedder is not None:
            vectors = [self.embedder(text) for text in texts]
        else:
            vectors = [hash_embedding(text, self.embed_dim) for text in texts]
        self._record({"endpoint": "embeddings", "texts": list(texts)})
        return vectors

    def backend_calls(self) -> int:
        return len(self.calls)


def _section(text: str, start_marker: str, end_marker: str) -> str:
    start = text.find(start_marker)
    if start == -1:
        return ""
    start += len(start_marker)
    end = text.find(end_marker, start)
    return text[start:] if end == -1 else text[start:end]


_JUDGE_TAIL_RE = re.compile(
    r"REFERENCE: (.*?) GENERATED: (.*) Similarity score \(0\.\.9\):", re.DOTALL
)


class KeywordMockClient(MockClient):
    """Answers every frozen-template prompt from kw-marker tokens.

    - rubric generation: one "response mentions <kw>" criterion (1
      point) per distinct kw token in the query block, in order of
      first appearance; datasets built with the same convention make
      generated rubrics textually identical to gold.
    - criterion grading: yes iff the criterion's kw tokens all appear
      in the graded response (no iff the criterion has none).
    - scalar scoring: count of distinct kw tokens in the response,
      capped at 10.
    - criterion similarity: floor of 9 x Jaccard overlap of the
      whitespace token sets.
    - bad response: fixed text containing no kw tokens.
    """

    def chat(self, messages: list[dict], extra: dict | None = None) -> str:
        text = self.fingerprint(messages)
        reply = self._keyword_reply(text, messages)
        if reply is None:
            return super().chat(messages, extra)
        self._record(
            {"endpoint": "chat", "messages": messages, "extra": extra or {}, "reply": reply}
        )
        return reply

    def _keyword_reply(self, text: str, messages: list[dict]) -> str | None:
        if "against a single rubric criterion" in text:
            response = _section(text, "Response under evaluation:\n", "\nCriterion:")
            criterion = _section(text, "Criterion:\n", "\nDoes the response satisfy")
            wanted = set(KW_TOKEN_RE.findall(criterion))
            present = set(KW_TOKEN_RE.findall(response))
            return "yes" if wanted and wanted <= present else "no"
        if "Rate the overall quality" in text:
            response = _section(text, "Response under evaluation:\n", "\nRate the overall")
            return str(min(10, len(set(KW_TOKEN_RE.findall(response)))))
        if "expert evaluator of rubric criterion similarity" in text:
            match = _JUDGE_TAIL_RE.search(text)
            if match is None:
                return "0"
            ref_tokens = set(match.group(1).lower().split())
            gen_tokens = set(match.group(2).lower().split())
            union = ref_tokens | gen_tokens
            if not union:
                return "9"
            return str(int(9 * len(ref_tokens & gen_tokens) / len(union)))
        if "physician-annotator" in text:
            user_content = messages[-1]["content"]
            before_task = user_content.split("\nTask: Generate a comprehensive set", 1)[0]
            query_block = before_task.rsplit("\n\n", 1)[-1]
            seen: list[str] = []
            for token in KW_TOKEN_RE.findall(query_block):
                if token not in seen:
                    seen.append(token)
            rubrics = [
                {"criterion": f"response mentions {kw}", "points": 1} for kw in seen
            ]
            return json.dumps({"rubrics": rubrics})
        if "satisfies every criterion" in text:
            return "Thank you for the question. Please discuss this with a local professional."
        return None
