"""Provider contracts, HTTP clients, and the content-addressed replay cache.

A completion provider exposes ``complete(model_id, prompt) -> text`` and an
embedding provider exposes ``embed(model_id, texts) -> list of vectors``.
Any HTTP endpoint speaking the tiny JSON protocols below qualifies; tests
and offline runs substitute in-memory fakes or rely entirely on the cache.

Responses are cached one file per request under
``cache/<sha256 of model_id + prompt>.txt`` holding the raw response
bytes, which makes every provider-backed stage deterministic and
re-runnable offline once the cache is populated.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .errors import ConfigurationError, ProviderError

logger = logging.getLogger(__name__)

LLM_API_KEY_ENV = "LLM_API_KEY"
EMBED_API_KEY_ENV = "EMBED_API_KEY"


class LLMProvider(Protocol):
    def complete(self, model_id: str, prompt: str) -> str: ...


class EmbeddingProvider(Protocol):
    def embed(self, model_id: str, texts: Sequence[str]) -> list[list[float]]: ...


def cache_key(model_id: str, prompt: str) -> str:
    return hashlib.sha256((model_id + prompt).encode("utf-8")).hexdigest()


class ReplayCache:
    """File-per-request response store.

    Reads are lock-free; writes are serialized and atomic (temp file +
    rename) so concurrent extraction workers cannot interleave partial
    responses.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _path(self, model_id: str, prompt: str) -> Path:
        return self.directory / f"{cache_key(model_id, prompt)}.txt"

    def get(self, model_id: str, prompt: str) -> bytes | None:
        path = self._path(model_id, prompt)
        try:
            return path.read_bytes()
        except FileNotFoundError:
            return None

    def get_text(self, model_id: str, prompt: str) -> str | None:
        raw = self.get(model_id, prompt)
        return None if raw is None else raw.decode("utf-8")

    def put(self, model_id: str, prompt: str, response: bytes | str) -> None:
        data = response.encode("utf-8") if isinstance(response, str) else response
        path = self._path(model_id, prompt)
        with self._write_lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)

    def __len__(self) -> int:
        return sum(1 for _ in self.directory.glob("*.txt"))


@dataclass(frozen=True)
class RetryPolicy:
    """Exponential backoff: ``base_delay * 2**attempt`` between tries."""

    attempts: int = 3
    base_delay: float = 1.0

    def delays(self) -> list[float]:
        return [self.base_delay * (2**i) for i in range(self.attempts - 1)]


def _run_with_retries(call, policy: RetryPolicy, what: str):
    last_exc: Exception | None = None
    delays = policy.delays() + [None]
    for attempt, delay in enumerate(delays, start=1):
        try:
            return call()
        except (requests.RequestException, TimeoutError) as exc:
            last_exc = exc
            logger.warning(
                "provider retry what=%s attempt=%d error=%s", what, attempt, exc
            )
            if delay is not None:
                time.sleep(delay)
    raise ProviderError(
        f"{what} failed after {policy.attempts} attempts: {last_exc}",
        retryable=True,
    )


def _require_key(env_var: str) -> str:
    key = os.environ.get(env_var, "")
    if not key:
        raise ConfigurationError(
            f"provider endpoint configured but {env_var} is not set"
        )
    return key


class HttpLLMProvider:
    """Completion client: POST ``{"model", "prompt"}``, expect ``{"text"}``."""

    def __init__(
        self,
        endpoint: str,
        retry: RetryPolicy = RetryPolicy(),
        timeout: float = 60.0,
        api_key: str | None = None,
    ):
        if not endpoint:
            raise ConfigurationError("completion endpoint URL is empty")
        self.endpoint = endpoint
        self.retry = retry
        self.timeout = timeout
        self._key = api_key if api_key is not None else _require_key(LLM_API_KEY_ENV)

    def complete(self, model_id: str, prompt: str) -> str:
        def call() -> str:
            resp = requests.post(
                self.endpoint,
                json={"model": model_id, "prompt": prompt},
                headers={"Authorization": f"Bearer {self._key}"},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            body = resp.json()
            if "text" not in body:
                raise ProviderError(
                    f"completion response missing 'text' field: {body!r}"
                )
            return str(body["text"])

        return _run_with_retries(call, self.retry, "completion")


class HttpEmbeddingProvider:
    """Embedding client: POST ``{"model", "texts"}``, expect ``{"vectors"}``."""

    def __init__(
        self,
        endpoint: str,
        retry: RetryPolicy = RetryPolicy(),
        timeout: float = 60.0,
        api_key: str | None = None,
    ):
        if not endpoint:
            raise ConfigurationError("embedding endpoint URL is empty")
        self.endpoint = endpoint
        self.retry = retry
        self.timeout = timeout
        self._key = api_key if api_key is not None else _require_key(EMBED_API_KEY_ENV)

    def embed(self, model_id: str, texts: Sequence[str]) -> list[list[float]]:
        def call() -> list[list[float]]:
            resp = requests.post(
                self.endpoint,
                json={"model": model_id, "texts": list(texts)},
                headers={"Authorization": f"Bearer {self._key}"},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            body = resp.json()
            vectors = body.get("vectors")
            if not isinstance(vectors, list) or len(vectors) != len(texts):
                raise ProviderError(
                    "embedding response must carry one vector per input text"
                )
            return [[float(x) for x in vec] for vec in vectors]

        return _run_with_retries(call, self.retry, "embedding")


class UnavailableProvider:
    """Placeholder used when no endpoint is configured.

    Any call means the replay cache missed, which is a configuration
    problem in offline runs, so the error says exactly that.
    """

    def __init__(self, what: str = "provider"):
        self.what = what

    def _fail(self):
        raise ConfigurationError(
            f"no {self.what} endpoint configured and the replay cache has no "
            "response for this request"
        )

    def complete(self, model_id: str, prompt: str) -> str:
        self._fail()

    def embed(self, model_id: str, texts: Sequence[str]) -> list[list[float]]:
        self._fail()


def cached_complete(
    provider: LLMProvider, cache: ReplayCache, model_id: str, prompt: str
) -> str:
    """Cache-first completion; a live round-trip is recorded before returning."""
    hit = cache.get_text(model_id, prompt)
    if hit is not None:
        return hit
    text = provider.complete(model_id, prompt)
    cache.put(model_id, prompt, text)
    return text


def cached_embed(
    provider: EmbeddingProvider,
    cache: ReplayCache,
    model_id: str,
    texts: Sequence[str],
) -> list[list[float]]:
    """Cache-first embedding, keyed per individual text.

    Cached entries store the JSON vector for one text, so partial caches
    only pay for the misses (fetched in a single batched call).
    """
    vectors: dict[int, list[float]] = {}
    missing: list[tuple[int, str]] = []
    for i, text in enumerate(texts):
        hit = cache.get_text(model_id, text)
        if hit is None:
            missing.append((i, text))
        else:
            vectors[i] = [float(x) for x in json.loads(hit)]
    if missing:
        fetched = provider.embed(model_id, [t for _, t in missing])
        for (i, text), vec in zip(missing, fetched):
            cache.put(model_id, text, json.dumps(vec))
            vectors[i] = vec
    return [vectors[i] for i in range(len(texts))]
