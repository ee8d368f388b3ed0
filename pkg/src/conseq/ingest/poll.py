"""Periodic discovery of new articles across all enabled sources.

Each enabled source is searched for every domain keyword; URLs already in
the store are skipped, the rest are fetched and extracted. A failing
source never aborts the others: its error is recorded in the result and
polling continues (partial-success contract).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Protocol, Sequence

import httpx

from ..errors import CatalogError, FetchError
from ..model import Article, TechDomain
from .extract import extract_article
from .sources import RateLimiter, SourceConfig, fetch_page, search_source

log = logging.getLogger(__name__)

PER_KEYWORD_LIMIT = 20


class ArticleStore(Protocol):
    def has_article_url(self, canonical_url: str) -> bool: ...

    def add_article(self, article: Article) -> None: ...


@dataclass
class PollResult:
    articles: list[Article] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)  # (source, message)
    by_domain: dict[str, list[Article]] = field(default_factory=dict)

    def _add(self, domain_name: str, article: Article) -> None:
        self.articles.append(article)
        self.by_domain.setdefault(domain_name, []).append(article)


def poll_updates(
    domains: Sequence[TechDomain],
    since: datetime | None,
    *,
    sources: Sequence[SourceConfig],
    store: ArticleStore,
    client: httpx.Client,
    per_keyword_limit: int = PER_KEYWORD_LIMIT,
    clock: Callable[[], float] = time.monotonic,
    sleep: Callable[[float], None] = time.sleep,
    now: Callable[[], datetime] | None = None,
) -> PollResult:
    result = PollResult()
    seen_this_poll: set[str] = set()
    for source in sources:
        if not source.enabled:
            continue
        limiter = RateLimiter(source.rate_limit, clock=clock, sleep=sleep)
        try:
            _poll_source(
                source,
                domains,
                since,
                store=store,
                client=client,
                limiter=limiter,
                per_keyword_limit=per_keyword_limit,
                seen=seen_this_poll,
                now=now,
                result=result,
            )
        except FetchError as exc:
            log.warning("source %s failed: %s", source.name, exc)
            result.errors.append((source.name, str(exc)))
    return result


def _poll_source(
    source: SourceConfig,
    domains: Sequence[TechDomain],
    since: datetime | None,
    *,
    store: ArticleStore,
    client: httpx.Client,
    limiter: RateLimiter,
    per_keyword_limit: int,
    seen: set[str],
    now: Callable[[], datetime] | None,
    result: PollResult,
) -> None:
    for domain in domains:
        for keyword in domain.keywords:
            urls = search_source(
                source, keyword, per_keyword_limit, client=client, limiter=limiter
            )
            for url in urls:
                if url in seen or store.has_article_url(url):
                    continue
                seen.add(url)
                try:
                    page = fetch_page(url, source.name, client, limiter)
                    kwargs = {"fetched_at": now()} if now else {}
                    article = extract_article(page, url, source.name, **kwargs)
                except FetchError as exc:
                    result.errors.append((source.name, str(exc)))
                    continue
                except CatalogError as exc:
                    log.info("skipping %s: %s", url, exc)
                    result.errors.append((source.name, f"{url}: {exc}"))
                    continue
                if (
                    since is not None
                    and article.published_at is not None
                    and article.published_at < since.date()
                ):
                    continue
                store.add_article(article)
                result._add(domain.name, article)
