"""Language-model provider clients and the model capability tables.

Three HTTP client styles (OpenAI-, Anthropic-, and Gemini-shaped chat APIs)
plus a deterministic offline mock share one interface: configure, check the
connection cheaply, then ``complete`` chunk requests.  This module also owns
the model-name lookup tables: which output-length parameter a model takes,
its approximate context window, and the per-family safety factor.

Credentials come exclusively from environment variables (``OPENAI_API_KEY``,
``ANTHROPIC_API_KEY``, ``GEMINI_API_KEY``).  Endpoint base URLs are
configurable — ``SKILLMAP_<FAMILY>_BASE_URL`` or the ``base_url`` argument —
so tests can point clients at stub servers.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import httpx

from .errors import ConfigurationError, CredentialError, ProviderError

__all__ = [
    "FAMILY_OPENAI",
    "FAMILY_ANTHROPIC",
    "FAMILY_GEMINI",
    "FAMILY_MOCK",
    "ProviderConfig",
    "CompletionRequest",
    "CompletionResponse",
    "infer_family",
    "classify_token_param",
    "lookup_context_window",
    "default_safety_factor",
    "make_config",
    "create_provider",
    "mock_extract",
]

logger = logging.getLogger(__name__)

FAMILY_OPENAI = "openai-style"
FAMILY_ANTHROPIC = "anthropic-style"
FAMILY_GEMINI = "gemini-style"
FAMILY_MOCK = "mock"

ENV_VARS = {
    FAMILY_OPENAI: "OPENAI_API_KEY",
    FAMILY_ANTHROPIC: "ANTHROPIC_API_KEY",
    FAMILY_GEMINI: "GEMINI_API_KEY",
}

BASE_URL_ENV_VARS = {
    FAMILY_OPENAI: "SKILLMAP_OPENAI_BASE_URL",
    FAMILY_ANTHROPIC: "SKILLMAP_ANTHROPIC_BASE_URL",
    FAMILY_GEMINI: "SKILLMAP_GEMINI_BASE_URL",
}

DEFAULT_BASE_URLS = {
    FAMILY_OPENAI: "https://api.openai.com/v1",
    FAMILY_ANTHROPIC: "https://api.anthropic.com",
    FAMILY_GEMINI: "https://generativelanguage.googleapis.com",
}

ANTHROPIC_OUTPUT_CAP = 4096
ANTHROPIC_VERSION = "2023-06-01"

# Approximate context windows for representative models; resolved by longest
# partial match of the normalized name, defaulting to 4096.
CONTEXT_WINDOWS = {
    "gpt-4o": 128_000,
    "gpt-5": 128_000,
    "o3": 128_000,
    "claude-sonnet-4-5": 200_000,
    "claude-haiku-4-5": 200_000,
    "gemini-2-5-pro": 32_768,
    "gemini-2-5-flash": 32_768,
}
DEFAULT_CONTEXT_WINDOW = 4096

SAFETY_FACTORS = {
    FAMILY_OPENAI: 0.75,
    FAMILY_ANTHROPIC: 0.65,
    FAMILY_GEMINI: 0.75,
    FAMILY_MOCK: 1.0,  # boundary-exempt: the offline mock has no real window
}

MAX_ATTEMPTS = 3

_O_SERIES_RE = re.compile(r"^o[0-9]")


def _normalize(model_name: str) -> str:
    return model_name.strip().lower().replace(".", "-")


def infer_family(model_name: str) -> str:
    norm = _normalize(model_name)
    if "mock" in norm:
        return FAMILY_MOCK
    if "claude" in norm:
        return FAMILY_ANTHROPIC
    if "gemini" in norm:
        return FAMILY_GEMINI
    return FAMILY_OPENAI


def classify_token_param(model_name: str) -> str:
    """Which output-length parameter the model takes.

    o-series names (``o`` followed by a digit) and the gpt-5 family use
    ``max_completion_tokens``; gemini models leave the bound implicit; all
    remaining chat models use the traditional ``max_tokens``.
    """
    norm = _normalize(model_name)
    if "gemini" in norm:
        return "implicit"
    if _O_SERIES_RE.match(norm) or "gpt-5" in norm:
        return "max_completion_tokens"
    return "max_tokens"


def lookup_context_window(model_name: str, override: int | None = None) -> int:
    """Resolve the context window: explicit override, else table, else 4096."""
    if override is not None:
        return override
    norm = _normalize(model_name)
    best = None
    for key, window in CONTEXT_WINDOWS.items():
        if key in norm and (best is None or len(key) > len(best[0])):
            best = (key, window)
    return best[1] if best else DEFAULT_CONTEXT_WINDOW


def default_safety_factor(family: str) -> float:
    try:
        return SAFETY_FACTORS[family]
    except KeyError:
        raise ConfigurationError(f"unknown provider family: {family}") from None


@dataclass(frozen=True)
class ProviderConfig:
    family: str
    model_name: str
    token_param: str  # max_tokens | max_completion_tokens | implicit
    context_window: int
    safety_factor: float
    temperature: float | None  # None = omit from the wire payload
    output_cap: int | None
    api_key_env: str | None
    base_url: str | None


def make_config(
    model_name: str,
    *,
    context_window: int | None = None,
    safety_factor: float | None = None,
    temperature: float | None = 0.0,
    base_url: str | None = None,
) -> ProviderConfig:
    """Build a full provider configuration from a model name plus overrides.

    Temperature defaults to 0.0 for reproducibility and is forced to "omit"
    for o-series/gpt-5 models, where setting it is not meaningful.
    """
    family = infer_family(model_name)
    token_param = classify_token_param(model_name)
    if token_param == "max_completion_tokens":
        temperature = None
    if base_url is None and family in BASE_URL_ENV_VARS:
        base_url = os.environ.get(BASE_URL_ENV_VARS[family]) or DEFAULT_BASE_URLS[family]
    return ProviderConfig(
        family=family,
        model_name=model_name,
        token_param=token_param,
        context_window=lookup_context_window(model_name, context_window),
        safety_factor=(
            safety_factor if safety_factor is not None else default_safety_factor(family)
        ),
        temperature=temperature,
        output_cap=ANTHROPIC_OUTPUT_CAP if family == FAMILY_ANTHROPIC else None,
        api_key_env=ENV_VARS.get(family),
        base_url=base_url,
    )


@dataclass(frozen=True)
class CompletionRequest:
    """One chunk's worth of work for a provider."""

    config: ProviderConfig
    system: str
    user: str
    target_user: str
    chunk: str
    reserved_output: int


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    raw_body: str  # byte-exact response body for audit logging
    latency_s: float
    usage: dict | None
    structured: bool


class Provider:
    """Shared client plumbing: HTTP session, retries, error mapping."""

    family: str = "abstract"

    def __init__(
        self,
        config: ProviderConfig,
        *,
        transport: httpx.BaseTransport | None = None,
        timeout: float = 120.0,
        retry_base: float = 0.5,
        retry_cap: float = 8.0,
        sleep=time.sleep,
    ):
        self.config = config
        self._retry_base = retry_base
        self._retry_cap = retry_cap
        self._sleep = sleep
        self._client: httpx.Client | None = None
        if config.base_url:
            self._client = httpx.Client(
                base_url=config.base_url, transport=transport, timeout=timeout
            )

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def __enter__(self) -> "Provider":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- credentials ------------------------------------------------------

    def _api_key(self) -> str:
        env = self.config.api_key_env
        if env is None:
            return ""
        key = os.environ.get(env)
        if not key:
            raise ConfigurationError(
                f"environment variable {env} is not set (required for {self.family})"
            )
        return key

    # -- request plumbing -------------------------------------------------

    def _request(self, method: str, path: str, **kwargs) -> httpx.Response:
        assert self._client is not None
        try:
            response = self._client.request(method, path, **kwargs)
        except httpx.TimeoutException as exc:
            raise ProviderError(f"{self.family} request timed out: {exc}", retryable=True)
        except httpx.TransportError as exc:
            raise ProviderError(f"{self.family} connection failed: {exc}", retryable=True)
        if response.status_code == 429 or response.status_code >= 500:
            raise ProviderError(
                f"{self.family} returned HTTP {response.status_code}",
                status_code=response.status_code,
                retryable=True,
            )
        if response.status_code in (401, 403):
            raise CredentialError(
                f"{self.family} rejected the credentials (HTTP {response.status_code})"
            )
        if response.status_code >= 400:
            raise ProviderError(
                f"{self.family} returned HTTP {response.status_code}: "
                f"{response.text[:200]}",
                status_code=response.status_code,
                retryable=False,
            )
        return response

    def _request_with_retry(self, method: str, path: str, **kwargs) -> httpx.Response:
        """Up to MAX_ATTEMPTS tries; capped exponential backoff on retryables."""
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                return self._request(method, path, **kwargs)
            except ProviderError as exc:
                if not exc.retryable or attempt == MAX_ATTEMPTS:
                    raise
                delay = min(self._retry_cap, self._retry_base * 2 ** (attempt - 1))
                logger.warning(
                    "%s attempt %d/%d failed (%s); retrying in %.2fs",
                    self.family, attempt, MAX_ATTEMPTS, exc, delay,
                )
                self._sleep(delay)
        raise AssertionError("unreachable")

    # -- interface --------------------------------------------------------

    def check_connection(self) -> None:
        """Minimal authenticated call; raises before any heavy computation."""
        raise NotImplementedError

    def build_payload(self, request: CompletionRequest) -> dict:
        """Wire payload for one completion (exposed for contract tests)."""
        raise NotImplementedError

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        raise NotImplementedError


class OpenAIStyleProvider(Provider):
    family = FAMILY_OPENAI

    def _headers(self) -> dict:
        return {"Authorization": f"Bearer {self._api_key()}"}

    def check_connection(self) -> None:
        self._request("GET", "/models", headers=self._headers())

    def _response_format(self) -> dict | None:
        # o-series models are queried without a structured response_format;
        # the gpt-5 family takes "json_object", remaining chat models "json".
        norm = _normalize(self.config.model_name)
        if _O_SERIES_RE.match(norm):
            return None
        if "gpt-5" in norm:
            return {"type": "json_object"}
        return {"type": "json"}

    def build_payload(self, request: CompletionRequest) -> dict:
        payload: dict = {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            self.config.token_param: request.reserved_output,
        }
        if self.config.temperature is not None:
            payload["temperature"] = self.config.temperature
        response_format = self._response_format()
        if response_format is not None:
            payload["response_format"] = response_format
        return payload

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        payload = self.build_payload(request)
        start = time.monotonic()
        response = self._request_with_retry(
            "POST", "/chat/completions", headers=self._headers(), json=payload
        )
        latency = time.monotonic() - start
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected {self.family} response shape: {exc}")
        return CompletionResponse(
            text=text,
            raw_body=response.text,
            latency_s=latency,
            usage=body.get("usage"),
            structured="response_format" in payload,
        )


class AnthropicStyleProvider(Provider):
    family = FAMILY_ANTHROPIC

    def _headers(self) -> dict:
        return {"x-api-key": self._api_key(), "anthropic-version": ANTHROPIC_VERSION}

    def check_connection(self) -> None:
        self._request("GET", "/v1/models", headers=self._headers())

    def build_payload(self, request: CompletionRequest) -> dict:
        # Combined prompt (system plus user) with a fixed generated-token
        # bound of 4096 regardless of the context window.
        payload: dict = {
            "model": self.config.model_name,
            "max_tokens": self.config.output_cap or ANTHROPIC_OUTPUT_CAP,
            "messages": [
                {"role": "user", "content": f"{request.system}\n\n{request.user}"}
            ],
        }
        if self.config.temperature is not None:
            payload["temperature"] = self.config.temperature
        return payload

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        payload = self.build_payload(request)
        start = time.monotonic()
        response = self._request_with_retry(
            "POST", "/v1/messages", headers=self._headers(), json=payload
        )
        latency = time.monotonic() - start
        try:
            body = response.json()
            text = body["content"][0]["text"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected {self.family} response shape: {exc}")
        return CompletionResponse(
            text=text,
            raw_body=response.text,
            latency_s=latency,
            usage=body.get("usage"),
            structured=False,
        )


class GeminiStyleProvider(Provider):
    family = FAMILY_GEMINI

    def check_connection(self) -> None:
        self._request("GET", "/v1beta/models", params={"key": self._api_key()})

    def build_payload(self, request: CompletionRequest) -> dict:
        # Generation configuration carries the temperature only; the maximum
        # number of generated tokens stays implicit.
        payload: dict = {
            "contents": [
                {
                    "role": "user",
                    "parts": [{"text": f"{request.system}\n\n{request.user}"}],
                }
            ]
        }
        if self.config.temperature is not None:
            payload["generationConfig"] = {"temperature": self.config.temperature}
        return payload

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        payload = self.build_payload(request)
        path = f"/v1beta/models/{self.config.model_name}:generateContent"
        start = time.monotonic()
        response = self._request_with_retry(
            "POST", path, params={"key": self._api_key()}, json=payload
        )
        latency = time.monotonic() - start
        try:
            body = response.json()
            text = body["candidates"][0]["content"]["parts"][0]["text"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected {self.family} response shape: {exc}")
        return CompletionResponse(
            text=text,
            raw_body=response.text,
            latency_s=latency,
            usage=body.get("usageMetadata"),
            structured=False,
        )


# ---------------------------------------------------------------------------
# Deterministic offline mock
# ---------------------------------------------------------------------------

_FIELD_RE = re.compile(r'"(user|text)":\s*"((?:[^"\\]|\\.)*)"')
_WORD_RE = re.compile(r"[A-Za-z][A-Za-z0-9+#-]*")


@lru_cache(maxsize=1)
def _mock_vocabulary() -> frozenset[str]:
    ref = resources.files("skillmap").joinpath("data/mock_terms.txt")
    terms = set()
    for line in ref.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            terms.add(line.lower())
    return frozenset(terms)


def _unescape(value: str) -> str:
    try:
        return json.loads(f'"{value}"')
    except ValueError:
        return value


def _scan_messages(inputdata: str) -> list[tuple[str, str]]:
    """(user, text) pairs scanned from possibly-truncated INPUTDATA.

    Chunk boundaries cut mid-JSON, so this never assumes a parseable
    document: it pairs each ``"user"`` field with the next ``"text"`` field.
    Truncated strings simply fail to match and are dropped, deterministically.
    """
    pairs: list[tuple[str, str]] = []
    current_user: str | None = None
    for match in _FIELD_RE.finditer(inputdata):
        field, value = match.group(1), _unescape(match.group(2))
        if field == "user":
            current_user = value
        elif current_user is not None:
            pairs.append((current_user, value))
            current_user = None
    return pairs


def mock_extract(inputdata: str, target_user: str) -> str:
    """Deterministic extraction heuristic used by the offline mock provider.

    Candidate terms are words in the *target user's* messages that are
    ALL-CAPS acronyms, Capitalized words, or members of the bundled
    vocabulary list.  A term seen three or more times is level 2, exactly
    twice level 1, once level 0.  Output is the same JSON contract real
    models are prompted for.
    """
    vocab = _mock_vocabulary()
    counts: Counter[str] = Counter()
    for user, text in _scan_messages(inputdata):
        if user != target_user:
            continue
        for word in _WORD_RE.findall(text):
            if (
                (len(word) >= 2 and word.isupper())
                or (word[0].isupper() and any(c.islower() for c in word[1:]))
                or word.lower() in vocab
            ):
                counts[word] += 1
    items = []
    for term in sorted(counts):
        count = counts[term]
        level = 2 if count >= 3 else 1 if count == 2 else 0
        items.append(
            {
                "text": term,
                "level": level,
                "reason": (
                    f"The term appears {count} time(s) in messages "
                    f"authored by {target_user}."
                ),
            }
        )
    return json.dumps({target_user: items}, ensure_ascii=False)


class MockProvider(Provider):
    family = FAMILY_MOCK

    def __init__(self, config: ProviderConfig, **kwargs):
        super().__init__(config, **kwargs)

    def check_connection(self) -> None:
        return None  # offline: static validation only

    def build_payload(self, request: CompletionRequest) -> dict:
        return {
            "model": self.config.model_name,
            "target_user": request.target_user,
            "chunk_chars": len(request.chunk),
        }

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        text = mock_extract(request.chunk, request.target_user)
        return CompletionResponse(
            text=text, raw_body=text, latency_s=0.0, usage=None, structured=True
        )


_PROVIDER_CLASSES = {
    FAMILY_OPENAI: OpenAIStyleProvider,
    FAMILY_ANTHROPIC: AnthropicStyleProvider,
    FAMILY_GEMINI: GeminiStyleProvider,
    FAMILY_MOCK: MockProvider,
}


def create_provider(config: ProviderConfig, **kwargs) -> Provider:
    try:
        cls = _PROVIDER_CLASSES[config.family]
    except KeyError:
        raise ConfigurationError(f"unknown provider family: {config.family}") from None
    return cls(config, **kwargs)
