"""Configured article sources: search-result fetching and request pacing.

A source is described by name, base_url, a search path template with a
{keyword} placeholder, a per-minute rate limit, and an enabled flag.
Result pages are plain HTML whose anchors are the result links; adapters
for sites needing more structure plug in as per-source parsers.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass
from html.parser import HTMLParser
from typing import Callable
from urllib.parse import quote_plus, urljoin

import httpx

from ..errors import FetchError, MalformedUrl
from .urls import canonicalize_url

KEYWORD_PLACEHOLDER = "{keyword}"


@dataclass(frozen=True)
class SourceConfig:
    name: str
    base_url: str
    search_path_template: str
    rate_limit: int = 30
    enabled: bool = True

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("source name must be non-empty")
        if self.rate_limit < 1:
            raise ValueError("rate_limit must be >= 1")
        if self.search_path_template.count(KEYWORD_PLACEHOLDER) != 1:
            raise ValueError(
                f"search_path_template needs exactly one {KEYWORD_PLACEHOLDER}"
            )

    def search_url(self, keyword: str) -> str:
        path = self.search_path_template.replace(KEYWORD_PLACEHOLDER, quote_plus(keyword))
        return urljoin(self.base_url, path)


class RateLimiter:
    """Spaces requests so a source never sees more than rate_limit requests
    in any 60-second window. Jitter (a small random extra delay) smooths
    bursts; it defaults off so tests see exact spacing."""

    def __init__(
        self,
        rate_limit: int,
        *,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        jitter_s: float = 0.0,
        seed: int = 0,
    ):
        self._interval = 60.0 / rate_limit
        self._clock = clock
        self._sleep = sleep
        self._jitter = jitter_s
        self._rng = random.Random(seed)
        self._lock = threading.Lock()
        self._next_allowed = float("-inf")

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            wait = self._next_allowed - now
            if wait > 0:
                self._sleep(wait + (self._rng.uniform(0, self._jitter) if self._jitter else 0.0))
                now = self._clock()
            self._next_allowed = max(now, self._next_allowed) + self._interval


def fetch_page(
    url: str, source_name: str, client: httpx.Client, limiter: RateLimiter | None = None
) -> bytes:
    if limiter is not None:
        limiter.acquire()
    try:
        resp = client.get(url)
    except httpx.HTTPError as exc:
        raise FetchError(source_name, f"GET {url} failed: {exc}") from exc
    if resp.status_code != 200:
        raise FetchError(source_name, f"GET {url} returned HTTP {resp.status_code}")
    return resp.content


class _LinkParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.hrefs: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag != "a":
            return
        for k, v in attrs:
            if k == "href" and v:
                self.hrefs.append(v)


def search_source(
    source: SourceConfig,
    keyword: str,
    limit: int,
    *,
    client: httpx.Client,
    limiter: RateLimiter | None = None,
) -> list[str]:
    """Return up to limit canonical article URLs from the source's search
    results for the keyword, deduplicated, source order preserved."""
    if not source.enabled:
        raise ValueError(f"source {source.name!r} is disabled")
    page = fetch_page(source.search_url(keyword), source.name, client, limiter)
    parser = _LinkParser()
    parser.feed(page.decode("utf-8", errors="replace"))
    parser.close()

    seen: set[str] = set()
    urls: list[str] = []
    for href in parser.hrefs:
        try:
            canonical = canonicalize_url(urljoin(source.base_url, href))
        except MalformedUrl:
            continue
        if canonical in seen:
            continue
        seen.add(canonical)
        urls.append(canonical)
        if len(urls) >= limit:
            break
    return urls
