"""Uniform access to completion and embedding providers.

The Gateway wraps any provider with retries (exponential backoff, base 1s,
factor 2, max 3 attempts), a global requests-per-minute budget, per-tag
cost counters, and an optional token spend cap. Clock and sleep are
injectable so the schedule is observable in tests without real waiting.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from ..errors import BudgetExceeded, ProviderUnavailable

BACKOFF_BASE_S = 1.0
BACKOFF_FACTOR = 2.0
MAX_ATTEMPTS = 3
RATE_WINDOW_S = 60.0


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int
    temperature: float = 0.0
    stop: tuple[str, ...] | None = None
    tag: str = "untagged"

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.stop is not None:
            object.__setattr__(self, "stop", tuple(self.stop))


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int
    provider: str
    model: str
    latency_ms: float

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise ValueError("token counts must be non-negative")


class Provider(Protocol):
    """A concrete completion/embedding backend (mock or HTTP adapter)."""

    name: str
    model: str

    def complete_once(self, request: CompletionRequest) -> CompletionResponse: ...

    def embed_once(self, text: str) -> Sequence[float]: ...


@dataclass
class TagCounters:
    requests: int = 0
    attempts: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


def estimate_tokens(text: str) -> int:
    # Whitespace tokens; matches what the mock provider reports, and errs
    # high rarely enough for a coarse spend cap.
    return len(text.split())


class Gateway:
    """Thread-safe wrapper adding retries, pacing, and accounting.

    Shareable across threads: the rate window and counters are lock
    protected, and calls may be issued concurrently up to the rate budget.
    """

    def __init__(
        self,
        provider: Provider,
        *,
        rpm: int = 60,
        token_cap: int | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rpm < 1:
            raise ValueError("rpm must be >= 1")
        self._provider = provider
        self._rpm = rpm
        self._token_cap = token_cap
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._window: deque[float] = deque()
        self._spent_tokens = 0
        self._counters: dict[str, TagCounters] = {}

    @property
    def provider_name(self) -> str:
        return self._provider.name

    @property
    def model_name(self) -> str:
        return self._provider.model

    def counters(self, tag: str) -> TagCounters:
        with self._lock:
            return self._counters.setdefault(tag, TagCounters())

    def total_tokens(self) -> int:
        with self._lock:
            return sum(c.total_tokens for c in self._counters.values())

    def _acquire_slot(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                while self._window and now - self._window[0] >= RATE_WINDOW_S:
                    self._window.popleft()
                if len(self._window) < self._rpm:
                    self._window.append(now)
                    return
                wait = RATE_WINDOW_S - (now - self._window[0])
            self._sleep(max(wait, 0.0))

    def _check_budget(self, estimated: int) -> None:
        if self._token_cap is None:
            return
        with self._lock:
            if self._spent_tokens + estimated > self._token_cap:
                raise BudgetExceeded(
                    f"request needs ~{estimated} tokens; "
                    f"{self._token_cap - self._spent_tokens} left under the cap"
                )

    def _record(self, tag: str, attempts: int, prompt_tokens: int, completion_tokens: int) -> None:
        with self._lock:
            c = self._counters.setdefault(tag, TagCounters())
            c.requests += 1
            c.attempts += attempts
            c.prompt_tokens += prompt_tokens
            c.completion_tokens += completion_tokens
            self._spent_tokens += prompt_tokens + completion_tokens

    def _with_retries(self, call: Callable[[], object], tag: str) -> tuple[object, int]:
        attempts = 0
        while True:
            attempts += 1
            self._acquire_slot()
            try:
                return call(), attempts
            except ProviderUnavailable:
                if attempts >= MAX_ATTEMPTS:
                    raise
                self._sleep(BACKOFF_BASE_S * BACKOFF_FACTOR ** (attempts - 1))

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        self._check_budget(estimate_tokens(request.prompt) + request.max_tokens)
        response, attempts = self._with_retries(
            lambda: self._provider.complete_once(request), request.tag
        )
        assert isinstance(response, CompletionResponse)
        self._record(request.tag, attempts, response.prompt_tokens, response.completion_tokens)
        return response

    def embed(self, text: str, *, tag: str = "embed") -> np.ndarray:
        if not text:
            raise ValueError("text must be non-empty")
        self._check_budget(estimate_tokens(text))
        raw, attempts = self._with_retries(lambda: self._provider.embed_once(text), tag)
        vec = np.asarray(raw, dtype=np.float64)
        norm = float(np.linalg.norm(vec))
        if not 1.0 - 1e-6 <= norm <= 1.0 + 1e-6:
            raise ProviderUnavailable(f"provider returned non-unit vector (norm={norm})")
        self._record(tag, attempts, estimate_tokens(text), 0)
        return vec
