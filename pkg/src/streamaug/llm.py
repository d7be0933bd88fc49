"""Completion backends: a deterministic offline mock and an HTTP client.

Both expose ``complete(request) -> str``. The mock's output is a pure
function of (prompt, seed), so any pipeline driven by it is reproducible
bit-for-bit. The HTTP backend speaks the chat-completions wire format and
retries transient failures (429, 5xx, timeouts) with exponential backoff.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from dataclasses import dataclass

import httpx

from .errors import (
    AuthError,
    BackendError,
    BackendTimeout,
    RateLimited,
    ServerError,
)

RETRYABLE_STATUSES = frozenset({429} | set(range(500, 600)))

# Rating skew mirrors the heavy 4-5 imbalance of real review corpora.
DEFAULT_RATING_WEIGHTS = {1: 0.05, 2: 0.05, 3: 0.10, 4: 0.30, 5: 0.50}


def stable_seed(*parts) -> int:
    """Deterministic 63-bit seed from arbitrary parts (unlike hash())."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8"))
    return int.from_bytes(digest.digest()[:8], "big") >> 1


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int = 512
    temperature: float = 0.0
    seed: int = 0  # consumed by the mock backend only
    tag: str = ""  # purpose label recorded in run reports

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass
class BackendConfig:
    kind: str = "mock"  # "mock" | "http"
    endpoint: str = ""
    model: str = ""
    api_key_env: str = ""
    max_attempts: int = 3
    base_delay: float = 0.5
    multiplier: float = 2.0
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "http" and not (self.endpoint and self.api_key_env):
            raise ValueError("http backend needs an endpoint and an API key source")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


_PROFILE_STYLES = [
    "a practical", "an enthusiastic", "a skeptical", "a meticulous",
    "an impulsive", "a budget-minded", "a brand-loyal", "a curious",
]
_PROFILE_INTERESTS = [
    "household gadgets", "monthly magazines", "gift cards for family",
    "kitchen appliances", "hobby supplies", "tech accessories",
    "subscription boxes", "small luxuries",
]
_PROFILE_HABITS = [
    "writes short, direct comments", "compares items before buying",
    "rates generously when shipping is fast", "focuses on durability",
    "mentions price in most reviews", "reviews only after heavy use",
]
_POSITIVE_TEXTS = [
    "Exactly what I wanted, works great and arrived quickly.",
    "Very pleased with this one, solid quality for the price.",
    "Does the job well and the quality is better than expected.",
    "Great value, I would order this again without hesitation.",
]
_NEUTRAL_TEXTS = [
    "Decent overall, though a few details could be better.",
    "Works as described but nothing about it stands out.",
    "Acceptable quality, about what the price suggests.",
]
_NEGATIVE_TEXTS = [
    "Disappointing build quality, not what the listing promised.",
    "Stopped working sooner than it should have, would not rebuy.",
    "Felt cheap out of the box and performed accordingly.",
]


class MockBackend:
    """Offline stand-in: schema-valid completions derived from a hash.

    The response shape is keyed off the instruction markers the bundled
    prompt templates carry ("lss:" for judging, "products:" for product
    selection, "rating:" for review synthesis, profile text otherwise).
    Pure and lock-free; safe for concurrent callers.
    """

    name = "mock"

    def __init__(self, rating_weights: dict[int, float] | None = None):
        self.rating_weights = dict(rating_weights or DEFAULT_RATING_WEIGHTS)

    def _unit(self, request: CompletionRequest, salt: str) -> float:
        return (stable_seed(request.seed, salt, request.prompt) % 10**9) / 10**9

    def _pick(self, request: CompletionRequest, salt: str, options):
        return options[stable_seed(request.seed, salt, request.prompt) % len(options)]

    def _rating(self, request: CompletionRequest) -> int:
        u = self._unit(request, "rating")
        acc = 0.0
        total = sum(self.rating_weights.values())
        for rating in sorted(self.rating_weights):
            acc += self.rating_weights[rating] / total
            if u < acc:
                return rating
        return max(self.rating_weights)

    def _review_text(self, request: CompletionRequest, rating: int) -> str:
        pool = (
            _POSITIVE_TEXTS
            if rating >= 4
            else _NEUTRAL_TEXTS if rating == 3 else _NEGATIVE_TEXTS
        )
        return self._pick(request, "text", pool)

    def complete(self, request: CompletionRequest) -> str:
        prompt = request.prompt
        if "lss:" in prompt:
            scores = [
                1.0 + (stable_seed(request.seed, axis, prompt) % 41) / 10.0
                for axis in ("lss", "rhs", "ss", "as")
            ]
            return "lss: {0}\nrhs: {1}\nss: {2}\nas: {3}".format(*scores)
        if "products:" in prompt:
            ids = re.findall(r"^- (\S+):", prompt, flags=re.MULTILINE)
            ids.sort(key=lambda pid: stable_seed(request.seed, "select", pid, prompt))
            return "products: " + ", ".join(ids[:3])
        if "rating:" in prompt:
            rating = self._rating(request)
            return f"rating: {rating}\nreview: {self._review_text(request, rating)}"
        style = self._pick(request, "style", _PROFILE_STYLES)
        interest = self._pick(request, "interest", _PROFILE_INTERESTS)
        habit = self._pick(request, "habit", _PROFILE_HABITS)
        return f"This is {style} reviewer drawn to {interest} who {habit}."


class HttpBackend:
    """Chat-completions client with exponential-backoff retries.

    Retries 429 and 5xx responses and timeouts, sleeping
    base_delay * multiplier**(attempt-1) between attempts. 401/403 raise
    AuthError immediately; any other 4xx is never retried.
    """

    name = "http"

    def __init__(self, config: BackendConfig, transport=None, sleep=time.sleep):
        if config.kind != "http":
            raise ValueError("HttpBackend requires an http-kind config")
        self.config = config
        self._sleep = sleep
        self._client = httpx.Client(transport=transport, timeout=config.timeout)

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise AuthError(
                f"environment variable {self.config.api_key_env!r} is not set"
            )
        return {"Authorization": f"Bearer {key}"}

    def complete(self, request: CompletionRequest) -> str:
        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = self._headers()
        pending: BackendError | None = None
        for attempt in range(1, self.config.max_attempts + 1):
            try:
                response = self._client.post(
                    self.config.endpoint, json=body, headers=headers
                )
            except httpx.TimeoutException as exc:
                pending = BackendTimeout(str(exc))
            else:
                status = response.status_code
                if status == 200:
                    try:
                        return response.json()["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, ValueError) as exc:
                        raise BackendError(f"malformed completion body: {exc}")
                if status in (401, 403):
                    raise AuthError(f"authentication rejected ({status})")
                if status not in RETRYABLE_STATUSES:
                    raise BackendError(f"HTTP {status}: {response.text[:200]}")
                pending = (
                    RateLimited(f"HTTP 429 after {attempt} attempts")
                    if status == 429
                    else ServerError(f"HTTP {status} after {attempt} attempts")
                )
            if attempt < self.config.max_attempts:
                self._sleep(self.config.base_delay * self.config.multiplier ** (attempt - 1))
        assert pending is not None
        raise pending


Backend = MockBackend | HttpBackend


def make_backend(config: BackendConfig, transport=None) -> Backend:
    if config.kind == "mock":
        return MockBackend()
    return HttpBackend(config, transport=transport)


def complete(backend: Backend, request: CompletionRequest) -> str:
    """Uniform completion entry point over any backend."""
    return backend.complete(request)
