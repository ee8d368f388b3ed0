"""URL canonicalization for deduplication.

One canonical form per page: lowercased scheme/host, default ports
stripped, fragments dropped, tracking parameters removed, query keys
sorted, trailing slash removed from non-root paths. Idempotent.
"""

from __future__ import annotations

from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from ..errors import MalformedUrl

_DEFAULT_PORTS = {"http": 80, "https": 443}
_TRACKING_EXACT = {"fbclid", "gclid"}
_TRACKING_PREFIX = "utm_"


def _is_tracking(key: str) -> bool:
    return key in _TRACKING_EXACT or key.startswith(_TRACKING_PREFIX)


def canonicalize_url(url: str) -> str:
    try:
        parts = urlsplit(url.strip())
    except ValueError as exc:
        raise MalformedUrl(f"unparseable URL: {url!r}") from exc

    scheme = parts.scheme.lower()
    if scheme not in _DEFAULT_PORTS:
        raise MalformedUrl(f"not an http(s) URL: {url!r}")
    if not parts.hostname:
        raise MalformedUrl(f"URL has no host: {url!r}")

    host = parts.hostname.lower()
    try:
        port = parts.port
    except ValueError as exc:
        raise MalformedUrl(f"bad port in URL: {url!r}") from exc
    netloc = host if port is None or port == _DEFAULT_PORTS[scheme] else f"{host}:{port}"

    path = parts.path
    if path.endswith("/") and path != "/":
        path = path.rstrip("/")
        if not path:
            path = "/"

    params = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if not _is_tracking(k)
    ]
    query = urlencode(sorted(params))

    return urlunsplit((scheme, netloc, path, query, ""))
