"""Readability-style article extraction on the stdlib HTML parser.

Title preference order: og:title meta, then <title>, then the first <h1>.
Body: the paragraphs of whichever container element accumulates the most
paragraph text (the main-column heuristic), each paragraph whitespace
collapsed, joined with blank lines. Pages whose extracted body falls under
50 words are rejected as boilerplate.
"""

from __future__ import annotations

import hashlib
from datetime import date, datetime
from html.parser import HTMLParser

from ..errors import NoContent, NoTitle
from ..model import Article, utcnow

MIN_BODY_WORDS = 50

_CONTAINER_TAGS = frozenset({"article", "main", "section", "div", "body", "td", "li"})
_SKIP_TAGS = frozenset({"script", "style", "noscript", "template", "svg", "iframe"})
_PUBLISHED_META_NAMES = frozenset(
    {
        "article:published_time",
        "og:article:published_time",
        "date",
        "pubdate",
        "publish-date",
        "publication_date",
        "parsely-pub-date",
        "dc.date.issued",
        "datepublished",
    }
)


class _PageParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self._container_stack: list[int] = [0]
        self._next_id = 1
        self._skip_depth = 0
        self._p_parts: list[str] | None = None
        self._p_container = 0
        self._in_title = False
        self._in_h1 = False
        self._title_parts: list[str] = []
        self._h1_parts: list[str] = []
        self._h1_done = False
        self.og_title: str | None = None
        self.published_raw: str | None = None
        self.paragraphs: list[tuple[int, str]] = []

    def _flush_paragraph(self) -> None:
        if self._p_parts is None:
            return
        text = " ".join("".join(self._p_parts).split())
        if text:
            self.paragraphs.append((self._p_container, text))
        self._p_parts = None

    def _handle_meta(self, attrs: list[tuple[str, str | None]]) -> None:
        d = {k: (v or "") for k, v in attrs}
        key = (d.get("property") or d.get("name") or d.get("itemprop") or "").lower()
        content = d.get("content", "")
        if not content:
            return
        if key == "og:title" and self.og_title is None:
            self.og_title = content
        elif key in _PUBLISHED_META_NAMES and self.published_raw is None:
            self.published_raw = content

    def handle_starttag(self, tag, attrs):
        if tag == "meta":
            self._handle_meta(attrs)
            return
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
            return
        if self._skip_depth:
            return
        if tag == "p":
            self._flush_paragraph()  # unclosed <p> before a new one
            self._p_parts = []
            self._p_container = self._container_stack[-1]
        elif tag == "br" and self._p_parts is not None:
            self._p_parts.append(" ")
        elif tag == "title":
            self._in_title = True
        elif tag == "h1" and not self._h1_done:
            self._in_h1 = True
        elif tag in _CONTAINER_TAGS:
            self._flush_paragraph()
            self._container_stack.append(self._next_id)
            self._next_id += 1

    def handle_startendtag(self, tag, attrs):
        if tag == "meta":
            self._handle_meta(attrs)
        elif tag == "br" and self._p_parts is not None:
            self._p_parts.append(" ")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._skip_depth:
            return
        if tag == "p":
            self._flush_paragraph()
        elif tag == "title":
            self._in_title = False
        elif tag == "h1" and self._in_h1:
            self._in_h1 = False
            self._h1_done = True
        elif tag in _CONTAINER_TAGS:
            self._flush_paragraph()
            if len(self._container_stack) > 1:
                self._container_stack.pop()

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._p_parts is not None:
            self._p_parts.append(data)
        if self._in_title:
            self._title_parts.append(data)
        if self._in_h1:
            self._h1_parts.append(data)

    def close(self):
        super().close()
        self._flush_paragraph()

    @property
    def title_tag_text(self) -> str:
        return " ".join("".join(self._title_parts).split())

    @property
    def h1_text(self) -> str:
        return " ".join("".join(self._h1_parts).split())


def _parse_published(raw: str | None) -> date | None:
    if not raw:
        return None
    try:
        return date.fromisoformat(raw.strip()[:10])
    except ValueError:
        return None


def extract_article(
    html: bytes | str,
    url: str,
    source: str,
    *,
    fetched_at: datetime | None = None,
) -> Article:
    if isinstance(html, bytes):
        html = html.decode("utf-8", errors="replace")
    parser = _PageParser()
    parser.feed(html)
    parser.close()

    title = ""
    for candidate in (parser.og_title or "", parser.title_tag_text, parser.h1_text):
        candidate = " ".join(candidate.split())
        if candidate:
            title = candidate
            break
    if not title:
        raise NoTitle(f"no og:title, <title>, or <h1> in page at {url}")

    totals: dict[int, int] = {}
    for container, text in parser.paragraphs:
        totals[container] = totals.get(container, 0) + len(text)
    body = ""
    if totals:
        best = max(totals, key=lambda c: (totals[c], -c))
        body = "\n\n".join(text for c, text in parser.paragraphs if c == best)

    word_count = len(body.split())
    if word_count < MIN_BODY_WORDS:
        raise NoContent(
            f"extracted body has {word_count} words (< {MIN_BODY_WORDS}) at {url}"
        )

    return Article(
        id=article_id_for(url),
        canonical_url=url,
        source=source,
        title=title,
        body=body,
        fetched_at=fetched_at or utcnow(),
        published_at=_parse_published(parser.published_raw),
    )


def article_id_for(canonical_url: str) -> str:
    return hashlib.sha256(canonical_url.encode("utf-8")).hexdigest()[:16]
