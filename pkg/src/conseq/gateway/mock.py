"""Deterministic offline provider for tests, fixtures, and demo serving.

Completions come from a rule table: an ordered list of entries, each a set
of substrings that must ALL appear in the prompt, plus the canned response.
First matching entry wins; no match yields the default response. The rule
table file format is JSON:

    [
      {"match": ["Answer Yes or No.", "simulator sickness"], "response": "Yes"},
      {"match": ["being discussed here is"], "response": " that it harms sleep."}
    ]

Embeddings are seeded feature-hashing vectors (dimension 64): every word
token is hashed into a signed bucket, counts accumulated, then the vector
is normalized to unit length. A pure function of (text, seed).
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass

import numpy as np

from ..errors import ProviderUnavailable
from .core import CompletionRequest, CompletionResponse

EMBED_DIM = 64

_TOKEN_RE = re.compile(r"[a-z0-9']+")


@dataclass(frozen=True)
class MockRule:
    match: tuple[str, ...]
    response: str

    def __post_init__(self):
        object.__setattr__(self, "match", tuple(self.match))
        if not self.match:
            raise ValueError("rule needs at least one match substring")

    def matches(self, prompt: str) -> bool:
        return all(s in prompt for s in self.match)


def load_rules(text: str) -> tuple[MockRule, ...]:
    data = json.loads(text)
    return tuple(MockRule(match=tuple(e["match"]), response=e["response"]) for e in data)


def hashed_embedding(text: str, seed: int, dim: int = EMBED_DIM) -> np.ndarray:
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        raise ValueError("cannot embed text with no word tokens")
    vec = np.zeros(dim, dtype=np.float64)
    for tok in tokens:
        digest = hashlib.sha256(f"{seed}:{tok}".encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:8], "big") % dim
        sign = 1.0 if digest[8] % 2 == 0 else -1.0
        vec[bucket] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # Signed counts cancelled out; fall back to a deterministic basis
        # vector so the unit-norm contract still holds.
        vec[int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big") % dim] = 1.0
        return vec
    return vec / norm


class MockProvider:
    """Pure-function provider: (prompt, rule table, seed) fully determine
    every completion and embedding."""

    name = "mock"
    model = "rule-table-v1"

    def __init__(
        self,
        rules: tuple[MockRule, ...] = (),
        *,
        default_response: str = "",
        seed: int = 7,
        fail_times: int = 0,
    ):
        self._rules = tuple(
            r if isinstance(r, MockRule) else MockRule(match=tuple(r["match"]), response=r["response"])
            for r in rules
        )
        self._default = default_response
        self._seed = seed
        # Simulated transient outage: the first fail_times calls raise.
        self._fail_remaining = fail_times

    def _maybe_fail(self) -> None:
        if self._fail_remaining > 0:
            self._fail_remaining -= 1
            raise ProviderUnavailable("simulated transient failure")

    def complete_once(self, request: CompletionRequest) -> CompletionResponse:
        self._maybe_fail()
        text = self._default
        for rule in self._rules:
            if rule.matches(request.prompt):
                text = rule.response
                break
        if request.stop:
            for s in request.stop:
                idx = text.find(s)
                if idx != -1:
                    text = text[:idx]
        return CompletionResponse(
            text=text,
            prompt_tokens=len(request.prompt.split()),
            completion_tokens=len(text.split()),
            provider=self.name,
            model=self.model,
            latency_ms=0.0,
        )

    def embed_once(self, text: str) -> np.ndarray:
        self._maybe_fail()
        return hashed_embedding(text, self._seed)
