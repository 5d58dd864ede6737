import json
import threading

import pytest

import xlforge.backends as backends_mod
from xlforge.backends import (
    BackendConfig,
    BackendError,
    ConfigurationError,
    DiskCache,
    LibreTranslateBackend,
    LlmChatBackend,
    MockBackend,
    RateLimiter,
    build_backend,
    cache_digest,
)


def make_mock(mode="exact", tagged=True, cache=None):
    config = BackendConfig(kind="mock", name="mock", options={"mode": mode, "tagged": tagged})
    return MockBackend(config, cache=cache)


class TestMockSemantics:
    def test_forward_translation_reverses_and_tags(self):
        assert make_mock().translate("a b c", "en", "hi") == "<hi> c b a"

    def test_round_trip_is_exact(self):
        backend = make_mock()
        forward = backend.translate("a b c", "en", "hi")
        assert backend.translate(forward, "hi", "en") == "a b c"

    def test_round_trip_exact_for_random_token_lists(self):
        import random

        rng = random.Random(4)
        backend = make_mock()
        for _ in range(50):
            text = " ".join(
                rng.choice(["alpha", "beta", "गामा", "x1", "y2."])
                for _ in range(rng.randint(1, 15))
            )
            forward = backend.translate(text, "en", "hi")
            assert backend.translate(forward, "hi", "en") == text

    def test_correction_is_identity(self):
        assert make_mock().correct_sentence("कुछ पाठ", "hi") == "कुछ पाठ"

    def test_paraphrase_rotation(self):
        assert make_mock().paraphrase("a b c", "en") == "c a b"

    def test_paraphrase_single_token_unchanged(self):
        assert make_mock().paraphrase("a", "en") == "a"

    def test_paraphrase_keeps_language_tag_in_place(self):
        assert make_mock().paraphrase("<hi> c b a", "hi") == "<hi> a c b"

    def test_llm_translate_behaves_as_translate(self):
        backend = make_mock()
        result = backend.llm_translate("a b c", "en", "hi")
        assert result.text == "<hi> c b a"
        assert result.hallucination is False

    def test_echo_mode_sets_hallucination_flag(self):
        backend = make_mock(mode="echo")
        result = backend.llm_translate("a b c", "en", "hi")
        assert result.text == "a b c"
        assert result.hallucination is True

    def test_lossy_round_trip_rotates(self):
        backend = make_mock(mode="lossy")
        forward = backend.translate("a b c", "en", "hi")
        assert backend.translate(forward, "hi", "en") == "b c a"

    def test_tagless_round_trip_still_exact(self):
        backend = make_mock(tagged=False)
        forward = backend.translate("a b c", "en", "hi")
        assert forward == "c b a"
        assert backend.translate(forward, "hi", "en") == "a b c"

    def test_lossy_requires_tagging(self):
        with pytest.raises(ConfigurationError):
            make_mock(mode="lossy", tagged=False)

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            make_mock().translate("", "en", "hi")
        with pytest.raises(ValueError):
            make_mock().correct_sentence("", "hi")

    def test_same_language_translate_rejected(self):
        with pytest.raises(ValueError):
            make_mock().translate("a", "en", "en")


class TestCache:
    def test_repeated_call_hits_cache(self):
        backend = make_mock()
        before = backend.request_count
        backend.translate("x y z", "en", "hi")
        mid = backend.request_count
        backend.translate("x y z", "en", "hi")
        assert backend.request_count == mid
        assert mid == before + 1

    def test_language_is_part_of_the_key(self):
        backend = make_mock()
        backend.translate("x y", "en", "hi")
        backend.translate("x y", "en", "fr")
        assert backend.request_count == 2

    def test_digest_is_content_addressed(self):
        key = {"backend": {"kind": "mock"}, "text": "x", "operation": "translate"}
        assert cache_digest(key) == cache_digest(dict(reversed(list(key.items()))))
        changed = dict(key, text="y")
        assert cache_digest(changed) != cache_digest(key)

    def test_disk_cache_persists_across_instances(self, tmp_path):
        first = make_mock(cache=DiskCache(tmp_path))
        first.translate("p q r", "en", "hi")
        assert first.request_count == 1

        second = make_mock(cache=DiskCache(tmp_path))
        out = second.translate("p q r", "en", "hi")
        assert out == "<hi> r q p"
        assert second.request_count == 0

    def test_corrupt_entry_recomputed(self, tmp_path):
        cache = DiskCache(tmp_path)
        backend = make_mock(cache=cache)
        backend.translate("p q", "en", "hi")
        entry_files = list(tmp_path.rglob("*.json"))
        assert len(entry_files) == 1
        entry_files[0].write_text("{not valid json", encoding="utf-8")

        fresh = make_mock(cache=DiskCache(tmp_path))
        assert fresh.translate("p q", "en", "hi") == "<hi> q p"
        assert fresh.request_count == 1

    def test_distinct_mock_modes_do_not_share_entries(self, tmp_path):
        cache = DiskCache(tmp_path)
        exact = make_mock(cache=cache)
        lossy = make_mock(mode="lossy", cache=cache)
        assert exact.translate("a b c", "en", "hi") != lossy.translate("a b c", "en", "hi")


class TestRateLimiter:
    def test_limit_enforced_on_virtual_clock(self):
        clock = {"now": 0.0}
        sleeps = []

        def fake_sleep(seconds):
            sleeps.append(seconds)
            clock["now"] += seconds

        limiter = RateLimiter(3, clock=lambda: clock["now"], sleep=fake_sleep)
        stamps = []
        for _ in range(7):
            limiter.acquire()
            stamps.append(clock["now"])
            clock["now"] += 1.0

        # no 60-second window may contain more than 3 acquisitions
        for i in range(len(stamps)):
            window = [s for s in stamps if stamps[i] <= s < stamps[i] + 60.0]
            assert len(window) <= 3
        assert sleeps, "limiter never had to wait"

    def test_no_wait_under_the_limit(self):
        calls = []
        limiter = RateLimiter(100, clock=lambda: 0.0, sleep=calls.append)
        for _ in range(50):
            limiter.acquire()
        assert not calls


class FakeResponse:
    def __init__(self, status_code, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.text = text

    def json(self):
        if self._payload is None:
            raise ValueError("no json")
        return self._payload


class TestHttpBackends:
    def make_libre(self, responses, sleeps=None):
        config = BackendConfig(kind="libre_translate_api", endpoint="http://mt.local", name="libre")
        backend = LibreTranslateBackend(config, sleep=(sleeps.append if sleeps is not None else lambda s: None))
        script = list(responses)

        def fake_post(url, json=None, timeout=None):
            action = script.pop(0)
            if isinstance(action, Exception):
                raise action
            return action

        return backend, fake_post

    def test_successful_translation(self, monkeypatch):
        backend, fake_post = self.make_libre(
            [FakeResponse(200, {"translatedText": "नमस्ते"})]
        )
        monkeypatch.setattr(backends_mod.requests, "post", fake_post)
        assert backend.translate("hello", "en", "hi") == "नमस्ते"

    def test_429_retried_then_succeeds(self, monkeypatch):
        sleeps = []
        backend, fake_post = self.make_libre(
            [FakeResponse(429), FakeResponse(200, {"translatedText": "ok"})],
            sleeps=sleeps,
        )
        monkeypatch.setattr(backends_mod.requests, "post", fake_post)
        assert backend.translate("hello", "en", "hi") == "ok"
        assert sleeps == [1.0]
        assert backend.request_count == 2

    def test_exhausted_retries_raise_backend_error(self, monkeypatch):
        sleeps = []
        backend, fake_post = self.make_libre(
            [FakeResponse(503), FakeResponse(503), FakeResponse(503)], sleeps=sleeps
        )
        monkeypatch.setattr(backends_mod.requests, "post", fake_post)
        with pytest.raises(BackendError):
            backend.translate("hello", "en", "hi")
        assert sleeps == [1.0, 2.0]  # exponential backoff from one second

    def test_client_error_not_retried(self, monkeypatch):
        backend, fake_post = self.make_libre([FakeResponse(400, text="bad request")])
        monkeypatch.setattr(backends_mod.requests, "post", fake_post)
        with pytest.raises(BackendError):
            backend.translate("hello", "en", "hi")
        assert backend.request_count == 1

    def test_empty_translation_is_error(self, monkeypatch):
        backend, fake_post = self.make_libre([FakeResponse(200, {"translatedText": ""})])
        monkeypatch.setattr(backends_mod.requests, "post", fake_post)
        with pytest.raises(BackendError):
            backend.translate("hello", "en", "hi")

    def test_api_key_env_override(self, monkeypatch):
        seen = {}

        def fake_post(url, json=None, timeout=None):
            seen.update(json)
            return FakeResponse(200, {"translatedText": "ok"})

        monkeypatch.setattr(backends_mod.requests, "post", fake_post)
        monkeypatch.setenv("XLF_API_KEY", "env-secret")
        config = BackendConfig(
            kind="libre_translate_api", endpoint="http://mt.local", api_key="file-secret"
        )
        LibreTranslateBackend(config).translate("hello", "en", "hi")
        assert seen["api_key"] == "env-secret"

    def test_llm_chat_payload_parsing(self, monkeypatch):
        def fake_post(url, json=None, timeout=None):
            prompt = json["messages"][0]["content"]
            assert "hello" in prompt
            return FakeResponse(
                200, {"choices": [{"message": {"content": "अनुवाद"}}]}
            )

        monkeypatch.setattr(backends_mod.requests, "post", fake_post)
        config = BackendConfig(kind="llm_chat_api", endpoint="http://llm.local")
        result = LlmChatBackend(config).llm_translate("hello", "en", "hi")
        assert result.text == "अनुवाद"
        assert result.hallucination is False

    def test_llm_echo_flagged(self, monkeypatch):
        def fake_post(url, json=None, timeout=None):
            return FakeResponse(200, {"choices": [{"message": {"content": "hello"}}]})

        monkeypatch.setattr(backends_mod.requests, "post", fake_post)
        config = BackendConfig(kind="llm_chat_api", endpoint="http://llm.local")
        result = LlmChatBackend(config).llm_translate("hello", "en", "hi")
        assert result.hallucination is True

    def test_llm_malformed_payload(self, monkeypatch):
        def fake_post(url, json=None, timeout=None):
            return FakeResponse(200, {"unexpected": True})

        monkeypatch.setattr(backends_mod.requests, "post", fake_post)
        config = BackendConfig(kind="llm_chat_api", endpoint="http://llm.local")
        with pytest.raises(BackendError):
            LlmChatBackend(config).llm_translate("hello", "en", "hi")

    def test_paraphrase_needs_prompt_template(self, monkeypatch):
        config = BackendConfig(kind="llm_chat_api", endpoint="http://llm.local")
        with pytest.raises(ConfigurationError):
            LlmChatBackend(config).paraphrase("text", "hi")

    def test_libre_cannot_paraphrase(self):
        config = BackendConfig(kind="libre_translate_api", endpoint="http://mt.local")
        with pytest.raises(ConfigurationError):
            LibreTranslateBackend(config).paraphrase("text", "hi")

    def test_libre_cannot_llm_translate(self):
        config = BackendConfig(kind="libre_translate_api", endpoint="http://mt.local")
        with pytest.raises(ConfigurationError):
            LibreTranslateBackend(config).llm_translate("text", "en", "hi")


class TestFactory:
    def test_builds_each_kind(self):
        assert isinstance(build_backend(BackendConfig(kind="mock")), MockBackend)
        assert isinstance(
            build_backend(BackendConfig(kind="libre_translate_api", endpoint="http://x")),
            LibreTranslateBackend,
        )
        assert isinstance(
            build_backend(BackendConfig(kind="llm_chat_api", endpoint="http://x")),
            LlmChatBackend,
        )

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            build_backend(BackendConfig(kind="telepathy"))

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            BackendConfig(kind="mock", requests_per_minute=0)
        with pytest.raises(ConfigurationError):
            BackendConfig(kind="mock", timeout=0)
        with pytest.raises(ConfigurationError):
            BackendConfig(kind="mock", max_parallel_requests=0)
        with pytest.raises(ConfigurationError):
            build_backend(BackendConfig(kind="libre_translate_api"))


class TestParallelRequestBound:
    def test_in_flight_requests_capped(self, monkeypatch):
        barrier_state = {"active": 0, "peak": 0}
        lock = threading.Lock()

        def slow_post(url, json=None, timeout=None):
            with lock:
                barrier_state["active"] += 1
                barrier_state["peak"] = max(barrier_state["peak"], barrier_state["active"])
            import time as time_mod

            time_mod.sleep(0.02)
            with lock:
                barrier_state["active"] -= 1
            return FakeResponse(200, {"translatedText": "ok"})

        monkeypatch.setattr(backends_mod.requests, "post", slow_post)
        config = BackendConfig(
            kind="libre_translate_api",
            endpoint="http://mt.local",
            max_parallel_requests=2,
            requests_per_minute=10_000,
        )
        backend = LibreTranslateBackend(config)

        threads = [
            threading.Thread(target=backend.translate, args=(f"text {i}", "en", "hi"))
            for i in range(8)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert barrier_state["peak"] <= 2
