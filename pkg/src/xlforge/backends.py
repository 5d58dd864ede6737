"""Clients for the text-transformation services the pipeline drives.

Four operations share one surface: forward/back translation, sentence
correction (same-language re-translation), paraphrasing, and one-shot LLM
translation. Every backend gets persistent content-addressed caching, a
sliding-window rate limiter, and retry with exponential backoff.

The mock backend is fully deterministic and offline:

* translate      -- strip a leading "<src>" tag if present, reverse the
                    tokens, and prefix "<tgt>" only on the tagging (forward)
                    leg. The round trip is therefore exact.
* lang -> lang   -- identity (sentence correction).
* paraphrase     -- rotate tokens right by one position.
* mode "lossy"   -- the forward leg additionally rotates, so the round trip
                    comes back as a one-token rotation of the original.
* mode "echo"    -- llm_translate parrots its input (hallucination path).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional

import requests

logger = logging.getLogger(__name__)

API_KEY_ENV = "XLF_API_KEY"

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 1.0
RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


class BackendError(RuntimeError):
    """Transport or service failure after retries."""


class ConfigurationError(ValueError):
    """Backend configured in a way that cannot work."""


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # libre_translate_api | llm_chat_api | mock
    endpoint: str = ""
    api_key: Optional[str] = None
    requests_per_minute: float = 60.0
    timeout: float = 30.0
    prompt_template: Optional[str] = None
    name: str = ""
    max_parallel_requests: int = 4
    options: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.requests_per_minute <= 0:
            raise ConfigurationError("requests_per_minute must be > 0")
        if self.timeout <= 0:
            raise ConfigurationError("timeout must be > 0")
        if self.max_parallel_requests < 1:
            raise ConfigurationError("max_parallel_requests must be >= 1")

    def resolved_api_key(self) -> Optional[str]:
        return os.environ.get(API_KEY_ENV) or self.api_key


class MemoryCache:
    """Per-run memoization when no cache directory is configured."""

    def __init__(self):
        self._store: Dict[str, str] = {}
        self._lock = threading.Lock()

    def get(self, key: Dict[str, object]) -> Optional[str]:
        with self._lock:
            return self._store.get(cache_digest(key))

    def put(self, key: Dict[str, object], value: str) -> None:
        with self._lock:
            self._store[cache_digest(key)] = value


class DiskCache:
    """One file per entry under a digest-named path; survives across runs.

    Corrupt entries are ignored and recomputed with a logged warning.
    """

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, digest: str) -> Path:
        return self.directory / digest[:2] / f"{digest}.json"

    def get(self, key: Dict[str, object]) -> Optional[str]:
        path = self._path(cache_digest(key))
        if not path.exists():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
            value = entry["value"]
            if not isinstance(value, str):
                raise TypeError("cache value is not a string")
            return value
        except (ValueError, KeyError, TypeError, OSError) as exc:
            logger.warning("ignoring corrupt cache entry %s: %s", path, exc)
            return None

    def put(self, key: Dict[str, object], value: str) -> None:
        digest = cache_digest(key)
        path = self._path(digest)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {"key": key, "value": value, "created_at": time.time()}
        tmp = path.with_suffix(".tmp")
        with self._lock:
            tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
            os.replace(tmp, path)


def cache_digest(key: Dict[str, object]) -> str:
    canonical = json.dumps(key, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class RateLimiter:
    """At most ``rate_per_minute`` acquisitions in any sliding 60 s window.

    Clock and sleep are injectable so tests can drive a virtual clock.
    """

    def __init__(
        self,
        rate_per_minute: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.limit = max(1, int(rate_per_minute))
        self._clock = clock
        self._sleep = sleep
        self._stamps: deque = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.limit:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            self._sleep(max(wait, 0.0))


@dataclass(frozen=True)
class LlmTranslation:
    """One-shot LLM translation plus the echo-detection flag."""

    text: str
    hallucination: bool = False


class Backend:
    """Common cache/rate-limit/retry machinery; subclasses do the transport."""

    kind = "abstract"

    def __init__(
        self,
        config: BackendConfig,
        cache=None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.name = config.name or config.kind
        self.cache = cache if cache is not None else MemoryCache()
        self.limiter = RateLimiter(config.requests_per_minute, clock=clock, sleep=sleep)
        self._sleep = sleep
        self.request_count = 0
        self._count_lock = threading.Lock()
        self._inflight = threading.BoundedSemaphore(config.max_parallel_requests)

    # -- identity ---------------------------------------------------------

    def identity(self) -> Dict[str, object]:
        """Fields that make this backend distinguishable for cache keys."""
        return {
            "kind": self.config.kind,
            "endpoint": self.config.endpoint,
            "name": self.name,
        }

    def _cache_key(self, operation: str, source_lang: str, target_lang: str,
                   text: str, parameters: Optional[Dict[str, object]] = None) -> Dict[str, object]:
        return {
            "backend": self.identity(),
            "operation": operation,
            "source_lang": source_lang,
            "target_lang": target_lang,
            "text": text,
            "parameters": parameters or {},
        }

    def _cached(self, key: Dict[str, object], compute: Callable[[], str]) -> str:
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        value = compute()
        self.cache.put(key, value)
        return value

    # -- operations ---------------------------------------------------------

    def translate(self, text: str, source_lang: str, target_lang: str) -> str:
        if not text:
            raise ValueError("cannot translate empty text")
        if source_lang == target_lang:
            raise ValueError("translate requires distinct languages; use correct_sentence")
        key = self._cache_key("translate", source_lang, target_lang, text)
        return self._cached(key, lambda: self._translate_raw(text, source_lang, target_lang))

    def correct_sentence(self, text: str, lang: str) -> str:
        """Same-language re-translation; fixes word formation on real services."""
        if not text:
            raise ValueError("cannot correct empty text")
        key = self._cache_key("correct", lang, lang, text)
        return self._cached(key, lambda: self._correct_raw(text, lang))

    def paraphrase(self, text: str, lang: str) -> str:
        if not text:
            raise ValueError("cannot paraphrase empty text")
        key = self._cache_key(
            "paraphrase", lang, lang, text, {"prompt": self.config.prompt_template}
        )
        return self._cached(key, lambda: self._paraphrase_raw(text, lang))

    def llm_translate(self, text: str, source_lang: str, target_lang: str) -> LlmTranslation:
        if not text:
            raise ValueError("cannot translate empty text")
        key = self._cache_key(
            "llm_translate", source_lang, target_lang, text,
            {"prompt": self.config.prompt_template},
        )
        out = self._cached(key, lambda: self._llm_translate_raw(text, source_lang, target_lang))
        return LlmTranslation(text=out, hallucination=(out == text))

    # -- transport hooks ------------------------------------------------------

    def _translate_raw(self, text: str, source_lang: str, target_lang: str) -> str:
        raise NotImplementedError

    def _correct_raw(self, text: str, lang: str) -> str:
        return self._translate_same_lang(text, lang)

    def _translate_same_lang(self, text: str, lang: str) -> str:
        raise NotImplementedError

    def _paraphrase_raw(self, text: str, lang: str) -> str:
        raise ConfigurationError(
            f"backend kind {self.config.kind!r} cannot paraphrase; use llm_chat_api or mock"
        )

    def _llm_translate_raw(self, text: str, source_lang: str, target_lang: str) -> str:
        raise ConfigurationError(
            f"backend kind {self.config.kind!r} cannot do one-shot LLM translation"
        )

    # -- shared HTTP plumbing ------------------------------------------------

    def _note_request(self) -> None:
        with self._count_lock:
            self.request_count += 1

    def _http_post(self, url: str, payload: Dict[str, object]) -> Dict[str, object]:
        last_error: Optional[Exception] = None
        for attempt in range(RETRY_ATTEMPTS):
            self.limiter.acquire()
            self._note_request()
            try:
                with self._inflight:
                    response = requests.post(url, json=payload, timeout=self.config.timeout)
            except requests.RequestException as exc:
                last_error = exc
            else:
                if response.status_code in RETRYABLE_STATUS:
                    last_error = BackendError(
                        f"{url} answered HTTP {response.status_code}"
                    )
                elif response.status_code >= 400:
                    raise BackendError(
                        f"{url} answered HTTP {response.status_code}: {response.text[:200]}"
                    )
                else:
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise BackendError(f"{url} returned non-JSON body") from exc
            if attempt < RETRY_ATTEMPTS - 1:
                self._sleep(RETRY_BASE_DELAY * (2**attempt))
        raise BackendError(f"{url} failed after {RETRY_ATTEMPTS} attempts: {last_error}")


class MockBackend(Backend):
    """Offline deterministic backend; see the module docstring for semantics."""

    kind = "mock"

    def __init__(self, config: Optional[BackendConfig] = None, cache=None, **kwargs):
        config = config or BackendConfig(kind="mock", name="mock")
        super().__init__(config, cache=cache, **kwargs)
        self.mode = str(config.options.get("mode", "exact"))
        self.tagged = bool(config.options.get("tagged", True))
        if self.mode not in ("exact", "lossy", "echo"):
            raise ConfigurationError(f"unknown mock mode {self.mode!r}")
        if self.mode == "lossy" and not self.tagged:
            # the lossy leg is told apart from the back leg by the tag
            raise ConfigurationError("mock mode 'lossy' requires tagged=True")

    def identity(self) -> Dict[str, object]:
        base = super().identity()
        base["parameters"] = {"mode": self.mode, "tagged": self.tagged}
        return base

    @staticmethod
    def _rotate(tokens):
        return tokens[-1:] + tokens[:-1] if len(tokens) > 1 else tokens

    def _translate_raw(self, text: str, source_lang: str, target_lang: str) -> str:
        self._note_request()
        tokens = text.split()
        tag = f"<{source_lang}>"
        stripped = tokens and tokens[0] == tag
        if stripped:
            tokens = tokens[1:]
        tokens = list(reversed(tokens))
        if not stripped:
            # forward leg
            if self.mode == "lossy":
                tokens = self._rotate(tokens)
            if self.tagged:
                tokens = [f"<{target_lang}>"] + tokens
        return " ".join(tokens)

    def _translate_same_lang(self, text: str, lang: str) -> str:
        self._note_request()
        return text

    def _paraphrase_raw(self, text: str, lang: str) -> str:
        self._note_request()
        tokens = text.split()
        # a leading language tag is an artifact of the mock transport, not payload
        head = []
        if tokens and tokens[0] == f"<{lang}>":
            head, tokens = tokens[:1], tokens[1:]
        return " ".join(head + self._rotate(tokens))

    def _llm_translate_raw(self, text: str, source_lang: str, target_lang: str) -> str:
        if self.mode == "echo":
            self._note_request()
            return text
        return self._translate_raw(text, source_lang, target_lang)


class LibreTranslateBackend(Backend):
    """Any service speaking the LibreTranslate REST shape."""

    kind = "libre_translate_api"

    def __init__(self, config: BackendConfig, cache=None, **kwargs):
        if not config.endpoint:
            raise ConfigurationError("libre_translate_api needs an endpoint")
        super().__init__(config, cache=cache, **kwargs)

    def _translate_raw(self, text: str, source_lang: str, target_lang: str) -> str:
        payload = {"q": text, "source": source_lang, "target": target_lang, "format": "text"}
        api_key = self.config.resolved_api_key()
        if api_key:
            payload["api_key"] = api_key
        data = self._http_post(self.config.endpoint.rstrip("/") + "/translate", payload)
        translated = data.get("translatedText")
        if not isinstance(translated, str) or not translated:
            raise BackendError("translation service returned an empty result")
        return translated

    def _translate_same_lang(self, text: str, lang: str) -> str:
        return self._translate_raw(text, lang, lang)


DEFAULT_TRANSLATE_PROMPT = (
    "Translate the following text from {source_lang} to {target_lang}. "
    "Reply with only the translation, nothing else.\n\n{text}"
)


class LlmChatBackend(Backend):
    """Chat-completion endpoint used for one-shot translation and paraphrasing."""

    kind = "llm_chat_api"

    def __init__(self, config: BackendConfig, cache=None, **kwargs):
        if not config.endpoint:
            raise ConfigurationError("llm_chat_api needs an endpoint")
        super().__init__(config, cache=cache, **kwargs)

    def _chat(self, prompt: str) -> str:
        payload: Dict[str, object] = {
            "model": self.config.options.get("model", "default"),
            "messages": [{"role": "user", "content": prompt}],
        }
        api_key = self.config.resolved_api_key()
        if api_key:
            payload["api_key"] = api_key
        data = self._http_post(self.config.endpoint, payload)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat-completion payload: {data!r}") from exc
        if not isinstance(content, str) or not content.strip():
            raise BackendError("chat completion returned no text")
        return content.strip()

    def _llm_translate_raw(self, text: str, source_lang: str, target_lang: str) -> str:
        template = self.config.prompt_template or DEFAULT_TRANSLATE_PROMPT
        prompt = template.format(
            text=text, source_lang=source_lang, target_lang=target_lang
        )
        return self._chat(prompt)

    def _translate_raw(self, text: str, source_lang: str, target_lang: str) -> str:
        # same method for both legs of a round trip
        return self._llm_translate_raw(text, source_lang, target_lang)

    def _translate_same_lang(self, text: str, lang: str) -> str:
        return self._llm_translate_raw(text, lang, lang)

    def _paraphrase_raw(self, text: str, lang: str) -> str:
        if not self.config.prompt_template:
            raise ConfigurationError("paraphrasing with llm_chat_api needs prompt_template")
        prompt = self.config.prompt_template.format(
            text=text, lang=lang, source_lang=lang, target_lang=lang
        )
        return self._chat(prompt)


_BACKEND_KINDS = {
    "mock": MockBackend,
    "libre_translate_api": LibreTranslateBackend,
    "llm_chat_api": LlmChatBackend,
}


def build_backend(config: BackendConfig, cache=None, **kwargs) -> Backend:
    try:
        cls = _BACKEND_KINDS[config.kind]
    except KeyError:
        raise ConfigurationError(f"unknown backend kind {config.kind!r}") from None
    return cls(config, cache=cache, **kwargs)
