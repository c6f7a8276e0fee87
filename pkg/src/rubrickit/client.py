"""LLM backend clients: OpenAI-compatible HTTP plus a caching wrapper.

The HTTP client speaks the chat-completions and embeddings JSON shapes
over an injectable transport callable, so tests exercise retry and
fault paths without a network.  CachingClient wraps any client with a
content-addressed on-disk cache; cache hits are semantically identical
to live calls and never touch the backend.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import AuthError, MalformedResponse, RateLimited, TransportError


@dataclass
class ClientConfig:
    base_url: str = ""
    model_id: str = ""
    api_key_env: str = ""
    max_output_tokens: int = 1024
    temperature: float = 0.0
    extra_body: dict = field(default_factory=dict)
    max_in_flight: int = 4
    retry_count: int = 2
    retry_backoff: float = 0.5
    timeout: float = 120.0
    thinking_key: str = "enable_thinking"

    def __post_init__(self):
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


class LlmClient:
    """Minimal backend surface the rest of the toolkit depends on."""

    thinking_key = "enable_thinking"
    max_workers = 4

    @property
    def cache_identity(self) -> dict:
        """Request-independent parameters that must key the cache."""
        raise NotImplementedError

    def chat(self, messages: list[dict], extra: dict | None = None) -> str:
        raise NotImplementedError

    def embeddings(self, texts: list[str]) -> list[list[float]]:
        raise NotImplementedError

    def chat_many(
        self, message_lists: list[list[dict]], extra: dict | None = None
    ) -> list[str]:
        """Order-preserving concurrent fan-out of chat calls."""
        if not message_lists:
            return []
        if self.max_workers <= 1 or len(message_lists) == 1:
            return [self.chat(messages, extra) for messages in message_lists]
        with ThreadPoolExecutor(max_workers=min(self.max_workers, len(message_lists))) as pool:
            return list(pool.map(lambda m: self.chat(m, extra), message_lists))


def _requests_transport(timeout: float):
    session = requests.Session()

    def post(url: str, headers: dict, body: dict) -> tuple[int, str]:
        try:
            response = session.post(url, headers=headers, json=body, timeout=timeout)
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        return response.status_code, response.text

    return post


class HttpClient(LlmClient):
    """OpenAI-compatible chat/embeddings client.

    transport: callable(url, headers, body) -> (status_code, body_text),
    raising TransportError on connection failure.  In-flight requests
    are bounded by a semaphore regardless of caller concurrency.
    """

    def __init__(self, config: ClientConfig, transport=None):
        if not config.base_url:
            raise ValueError("base_url required for HTTP client")
        self.config = config
        self.thinking_key = config.thinking_key
        self.max_workers = config.max_in_flight
        self._transport = transport or _requests_transport(config.timeout)
        self._gate = threading.BoundedSemaphore(config.max_in_flight)
        self._lock = threading.Lock()
        self.network_calls = 0

    @property
    def cache_identity(self) -> dict:
        cfg = self.config
        return {
            "backend": "http",
            "model": cfg.model_id,
            "temperature": cfg.temperature,
            "max_output_tokens": cfg.max_output_tokens,
            "extra_body": cfg.extra_body,
        }

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post(self, endpoint: str, body: dict) -> dict:
        url = self.config.base_url.rstrip("/") + "/" + endpoint
        headers = self._headers()
        attempts = self.config.retry_count + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(self.config.retry_backoff * (2 ** (attempt - 1)))
            try:
                with self._gate:
                    with self._lock:
                        self.network_calls += 1
                    status, text = self._transport(url, headers, body)
            except TransportError as exc:
                last_error = exc
                continue
            if status == 200:
                try:
                    return json.loads(text)
                except json.JSONDecodeError as exc:
                    raise MalformedResponse(f"response body is not JSON: {exc.msg}") from exc
            if status in (401, 403):
                raise AuthError(f"HTTP {status} from {endpoint}")
            if status == 429:
                last_error = RateLimited(f"HTTP 429 from {endpoint}")
                continue
            if status >= 500:
                last_error = TransportError(f"HTTP {status} from {endpoint}")
                continue
            raise TransportError(f"HTTP {status} from {endpoint}: {text[:200]}")
        raise last_error  # type: ignore[misc]

    def chat(self, messages: list[dict], extra: dict | None = None) -> str:
        body = {
            "model": self.config.model_id,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        }
        body.update(self.config.extra_body)
        if extra:
            body.update(extra)
        data = self._post("chat/completions", body)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponse("chat response missing choices[0].message.content")
        if not isinstance(content, str):
            raise MalformedResponse("chat content is not a string")
        return content

    def embeddings(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            return []
        body = {"model": self.config.model_id, "input": list(texts)}
        data = self._post("embeddings", body)
        try:
            items = sorted(data["data"], key=lambda item: item["index"])
            vectors = [list(map(float, item["embedding"])) for item in items]
        except (KeyError, TypeError, ValueError):
            raise MalformedResponse("embeddings response missing data[*].embedding")
        if len(vectors) != len(texts):
            raise MalformedResponse(
                f"expected {len(texts)} embeddings, got {len(vectors)}"
            )
        dims = {len(v) for v in vectors}
        if len(dims) > 1:
            raise MalformedResponse(f"inconsistent embedding dimensions {sorted(dims)}")
        return vectors


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class ResponseCache:
    """Content-addressed JSON store: cache/<first2>/<sha256>.json."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def key(self, endpoint: str, identity: dict, payload: dict) -> str:
        material = canonical_json(
            {"endpoint": endpoint, "identity": identity, "payload": payload}
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str):
        path = self._path(key)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return json.load(fh)["value"]
        except FileNotFoundError:
            return None

    def put(self, key: str, value) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump({"value": value}, fh, ensure_ascii=False)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class CachingClient(LlmClient):
    """Wraps any client with the on-disk response cache.

    Chat requests key on (identity, messages, extra); embeddings are
    cached per individual text so partially warm batches only send the
    cold remainder to the backend.
    """

    def __init__(self, inner: LlmClient, cache_dir: str | Path):
        self.inner = inner
        self.cache = ResponseCache(cache_dir)
        self.thinking_key = inner.thinking_key
        self.max_workers = inner.max_workers
        self._lock = threading.Lock()
        self.stats = {
            "chat_backend_calls": 0,
            "chat_cache_hits": 0,
            "embed_backend_texts": 0,
            "embed_cache_hits": 0,
        }

    @property
    def cache_identity(self) -> dict:
        return self.inner.cache_identity

    def _bump(self, counter: str, amount: int = 1) -> None:
        with self._lock:
            self.stats[counter] += amount

    def chat(self, messages: list[dict], extra: dict | None = None) -> str:
        payload = {"messages": messages, "extra": extra or {}}
        key = self.cache.key("chat/completions", self.inner.cache_identity, payload)
        cached = self.cache.get(key)
        if cached is not None:
            self._bump("chat_cache_hits")
            return cached
        reply = self.inner.chat(messages, extra)
        self._bump("chat_backend_calls")
        self.cache.put(key, reply)
        return reply

    def embeddings(self, texts: list[str]) -> list[list[float]]:
        keys = [
            self.cache.key("embeddings", self.inner.cache_identity, {"input": text})
            for text in texts
        ]
        vectors: list[list[float] | None] = [self.cache.get(k) for k in keys]
        self._bump("embed_cache_hits", sum(1 for v in vectors if v is not None))

        cold: dict[str, list[int]] = {}
        for position, (text, vector) in enumerate(zip(texts, vectors)):
            if vector is None:
                cold.setdefault(text, []).append(position)
        if cold:
            cold_texts = list(cold.keys())
            fresh = self.inner.embeddings(cold_texts)
            self._bump("embed_backend_texts", len(cold_texts))
            for text, vector in zip(cold_texts, fresh):
                self.cache.put(
                    self.cache.key("embeddings", self.inner.cache_identity, {"input": text}),
                    vector,
                )
                for position in cold[text]:
                    vectors[position] = vector
        return [list(v) for v in vectors]  # type: ignore[arg-type]

    def backend_calls(self) -> int:
        return self.stats["chat_backend_calls"] + self.stats["embed_backend_texts"]
