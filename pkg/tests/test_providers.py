"""Replay cache determinism and HTTP client behavior."""

import threading

import pytest

from sekg.errors import ConfigurationError, ProviderError
from sekg.providers import (
    HttpLLMProvider,
    ReplayCache,
    RetryPolicy,
    UnavailableProvider,
    cache_key,
    cached_complete,
    cached_embed,
)


class CountingLLM:
    def __init__(self, response="null"):
        self.calls = 0
        self.response = response

    def complete(self, model_id, prompt):
        self.calls += 1
        return self.response


class CountingEmbedder:
    def __init__(self, width=4):
        self.calls = 0
        self.width = width

    def embed(self, model_id, texts):
        self.calls += 1
        return [[float(len(t))] * self.width for t in texts]


class TestReplayCache:
    def test_first_call_records_second_replays(self, tmp_path):
        cache = ReplayCache(tmp_path)
        llm = CountingLLM(response="hello")
        first = cached_complete(llm, cache, "m", "p")
        second = cached_complete(llm, cache, "m", "p")
        assert first == second == "hello"
        assert llm.calls == 1

    def test_cache_file_layout(self, tmp_path):
        cache = ReplayCache(tmp_path)
        cached_complete(CountingLLM("resp"), cache, "model-x", "prompt-y")
        expected = tmp_path / f"{cache_key('model-x', 'prompt-y')}.txt"
        assert expected.exists()
        assert expected.read_text() == "resp"

    def test_different_model_same_prompt_distinct_entries(self, tmp_path):
        cache = ReplayCache(tmp_path)
        cached_complete(CountingLLM("a"), cache, "m1", "p")
        cached_complete(CountingLLM("b"), cache, "m2", "p")
        assert cache.get_text("m1", "p") == "a"
        assert cache.get_text("m2", "p") == "b"

    def test_concurrent_writers_do_not_corrupt(self, tmp_path):
        cache = ReplayCache(tmp_path)

        def write(i):
            cache.put("m", f"p{i}", f"response {i}")

        threads = [threading.Thread(target=write, args=(i,)) for i in range(16)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(cache) == 16
        for i in range(16):
            assert cache.get_text("m", f"p{i}") == f"response {i}"

    def test_cached_embed_partial_batch(self, tmp_path):
        cache = ReplayCache(tmp_path)
        embedder = CountingEmbedder()
        first = cached_embed(embedder, cache, "e", ["aa", "bbb"])
        assert embedder.calls == 1
        # one new text: only the miss hits the provider
        second = cached_embed(embedder, cache, "e", ["aa", "cccc", "bbb"])
        assert embedder.calls == 2
        assert second[0] == first[0]
        assert second[2] == first[1]

    def test_cached_embed_bitwise_identical(self, tmp_path):
        cache = ReplayCache(tmp_path)
        embedder = CountingEmbedder()
        v1 = cached_embed(embedder, cache, "e", ["term"])[0]
        v2 = cached_embed(embedder, cache, "e", ["term"])[0]
        assert v1 == v2
        assert embedder.calls == 1


class TestRetryPolicy:
    def test_delay_schedule_is_exponential(self):
        assert RetryPolicy(attempts=3, base_delay=1.0).delays() == [1.0, 2.0]
        assert RetryPolicy(attempts=4, base_delay=0.5).delays() == [0.5, 1.0, 2.0]


class TestHttpProviders:
    def test_missing_api_key_is_configuration_error(self, monkeypatch):
        monkeypatch.delenv("LLM_API_KEY", raising=False)
        with pytest.raises(ConfigurationError):
            HttpLLMProvider("http://localhost:1/complete")

    def test_transport_failure_exhausts_retries(self, monkeypatch):
        monkeypatch.setenv("LLM_API_KEY", "k")
        provider = HttpLLMProvider(
            # unroutable port; connection refused immediately
            "http://127.0.0.1:9/complete",
            retry=RetryPolicy(attempts=3, base_delay=0.0),
            timeout=0.2,
        )
        with pytest.raises(ProviderError) as err:
            provider.complete("m", "p")
        assert err.value.retryable
        assert "3 attempts" in str(err.value)

    def test_unavailable_provider_names_the_cache(self):
        with pytest.raises(ConfigurationError) as err:
            UnavailableProvider("completion").complete("m", "p")
        assert "replay cache" in str(err.value)
