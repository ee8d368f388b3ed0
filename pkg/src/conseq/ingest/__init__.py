from .extract import article_id_for, extract_article
from .poll import PollResult, poll_updates
from .sources import RateLimiter, SourceConfig, fetch_page, search_source
from .urls import canonicalize_url

__all__ = [
    "PollResult",
    "RateLimiter",
    "SourceConfig",
    "article_id_for",
    "canonicalize_url",
    "extract_article",
    "fetch_page",
    "poll_updates",
    "search_source",
]
