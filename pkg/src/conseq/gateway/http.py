"""HTTP adapters for real completion/embedding providers and a remote
title-classifier endpoint.

Wire contract (any concrete provider is adapted to this shape):

    POST {base_url}/complete
        request  {"model": ..., "prompt": ..., "max_tokens": ...,
                  "temperature": ..., "stop": [...] | null}
        response {"text": ..., "prompt_tokens": ..., "completion_tokens": ...}

    POST {base_url}/embed
        request  {"model": ..., "input": ...}
        response {"embedding": [...]}

    POST {classifier_url}
        request  {"title": ...}
        response {"score": 0..1}

Credentials travel as a bearer token. All transport and non-2xx failures
surface as ProviderUnavailable so the gateway's retry policy applies.
"""

from __future__ import annotations

import time

import httpx

from ..errors import ProviderUnavailable
from .core import CompletionRequest, CompletionResponse


class HttpProvider:
    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        api_key: str | None = None,
        timeout_s: float = 30.0,
        client: httpx.Client | None = None,
    ):
        self.name = "http"
        self.model = model
        self._base_url = base_url.rstrip("/")
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.Client(timeout=timeout_s, headers=headers)

    def _post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(f"{self._base_url}{path}", json=payload)
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailable(f"provider returned HTTP {resp.status_code}")
        return resp.json()

    def complete_once(self, request: CompletionRequest) -> CompletionResponse:
        started = time.monotonic()
        data = self._post(
            "/complete",
            {
                "model": self.model,
                "prompt": request.prompt,
                "max_tokens": request.max_tokens,
                "temperature": request.temperature,
                "stop": list(request.stop) if request.stop else None,
            },
        )
        return CompletionResponse(
            text=data["text"],
            prompt_tokens=int(data["prompt_tokens"]),
            completion_tokens=int(data["completion_tokens"]),
            provider=self.name,
            model=self.model,
            latency_ms=(time.monotonic() - started) * 1000.0,
        )

    def embed_once(self, text: str) -> list[float]:
        data = self._post("/embed", {"model": self.model, "input": text})
        return [float(x) for x in data["embedding"]]


class RemoteTitleClassifier:
    """Title classifier served over HTTP; drop-in peer of the native
    baseline (both expose predict(title) -> probability)."""

    def __init__(
        self,
        url: str,
        *,
        api_key: str | None = None,
        timeout_s: float = 10.0,
        client: httpx.Client | None = None,
    ):
        self._url = url
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.Client(timeout=timeout_s, headers=headers)

    def predict(self, title: str) -> float:
        try:
            resp = self._client.post(self._url, json={"title": title})
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"classifier transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailable(f"classifier returned HTTP {resp.status_code}")
        score = float(resp.json()["score"])
        if not 0.0 <= score <= 1.0:
            raise ProviderUnavailable(f"classifier score {score} outside [0, 1]")
        return score
