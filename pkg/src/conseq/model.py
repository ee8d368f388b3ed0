"""Core domain types, the aspect taxonomy, and canonical serialization.

All types here are immutable value objects: safe to share between threads
and to use as dict keys. Canonical card JSON (sorted keys, UTF-8, no
insignificant whitespace) is the interchange format for export, golden
files, and the UI.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from datetime import date, datetime, timezone

from .errors import UnknownAspect


class Aspect(enum.Enum):
    """The 10 aspects of life a consequence can affect."""

    ECONOMY = "Economy"
    ENVIRONMENT_SUSTAINABILITY = "Environment & Sustainability"
    EQUALITY_JUSTICE = "Equality & Justice"
    INFORMATION_DISCOURSE = "Information & Discourse"
    HEALTH_WELLBEING = "Health & Well-being"
    POLITICS = "Politics"
    POWER = "Power"
    SECURITY_PRIVACY = "Security & Privacy"
    USER_EXPERIENCE_ENTERTAINMENT = "User Experience & Entertainment"
    SOCIAL_NORMS_RELATIONSHIPS = "Social Norms & Relationships"

    def __str__(self) -> str:
        return self.value


# Card-header colors, one per aspect; served at /meta/aspects so the UI and
# the server can never disagree on the taxonomy.
ASPECT_COLORS: dict[Aspect, str] = {
    Aspect.ECONOMY: "#b8860b",
    Aspect.ENVIRONMENT_SUSTAINABILITY: "#2e7d32",
    Aspect.EQUALITY_JUSTICE: "#ad1457",
    Aspect.INFORMATION_DISCOURSE: "#1565c0",
    Aspect.HEALTH_WELLBEING: "#00838f",
    Aspect.POLITICS: "#6a1b9a",
    Aspect.POWER: "#4e342e",
    Aspect.SECURITY_PRIVACY: "#c62828",
    Aspect.USER_EXPERIENCE_ENTERTAINMENT: "#ef6c00",
    Aspect.SOCIAL_NORMS_RELATIONSHIPS: "#33691e",
}

SUMMARY_MIN_CHARS = 30
SUMMARY_MAX_CHARS = 1500


def _normalize_label(text: str) -> str:
    # "&" and the word "and" are interchangeable; whitespace collapses.
    text = text.replace("&", " and ")
    return " ".join(text.split()).casefold()


_ASPECT_LOOKUP = {_normalize_label(a.value): a for a in Aspect}


def parse_aspect(text: str) -> Aspect:
    """Map a raw label string onto the taxonomy.

    Trims, case-folds, collapses internal whitespace; treats "&" and "and"
    as interchangeable. Raises UnknownAspect when nothing matches.
    """
    aspect = _ASPECT_LOOKUP.get(_normalize_label(text))
    if aspect is None:
        raise UnknownAspect(f"not an aspect label: {text!r}")
    return aspect


def int_percent(part: int, whole: int) -> int:
    """Integer percentage of part/whole, rounded half-up. 0 when whole is 0."""
    if whole <= 0:
        return 0
    return (200 * part + whole) // (2 * whole)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


@dataclass(frozen=True)
class TechDomain:
    """A technology area defined by the keyword set used for retrieval."""

    name: str
    keywords: tuple[str, ...]
    approved: bool = False

    def __post_init__(self):
        _require(bool(self.name.strip()), "domain name must be non-empty")
        object.__setattr__(self, "keywords", tuple(self.keywords))
        _require(len(self.keywords) > 0, "domain needs at least one keyword")
        for kw in self.keywords:
            _require(bool(kw.strip()), "keywords must be non-empty after trimming")


@dataclass(frozen=True)
class Article:
    """A fetched, extracted online article."""

    id: str
    canonical_url: str
    source: str
    title: str
    body: str
    fetched_at: datetime
    published_at: date | None = None
    word_count: int = -1

    def __post_init__(self):
        _require(bool(self.title.strip()), "article title must be non-empty")
        expected = len(self.body.split())
        if self.word_count == -1:
            object.__setattr__(self, "word_count", expected)
        else:
            _require(
                self.word_count == expected,
                f"word_count {self.word_count} != {expected} tokens in body",
            )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "canonical_url": self.canonical_url,
            "source": self.source,
            "title": self.title,
            "body": self.body,
            "published_at": self.published_at.isoformat() if self.published_at else None,
            "fetched_at": self.fetched_at.isoformat(),
            "word_count": self.word_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Article":
        return cls(
            id=d["id"],
            canonical_url=d["canonical_url"],
            source=d["source"],
            title=d["title"],
            body=d["body"],
            fetched_at=datetime.fromisoformat(d["fetched_at"]),
            published_at=date.fromisoformat(d["published_at"]) if d.get("published_at") else None,
            word_count=d.get("word_count", -1),
        )


VALID_STAGES = ("title", "content")
VALID_VERDICTS = ("relevant", "irrelevant", "undetermined")


@dataclass(frozen=True)
class FilterDecision:
    """Verdict plus raw rationale from one pipeline stage."""

    stage: str
    verdict: str
    raw: str
    score: float | None = None

    def __post_init__(self):
        _require(self.stage in VALID_STAGES, f"bad stage {self.stage!r}")
        _require(self.verdict in VALID_VERDICTS, f"bad verdict {self.verdict!r}")
        if self.score is not None:
            _require(0.0 <= self.score <= 1.0, "score must be in [0, 1]")
        if self.stage == "content":
            _require(bool(self.raw), "content decisions must keep the raw model output")


@dataclass(frozen=True)
class Provenance:
    """Which provider/model produced a card, and with which prompts."""

    provider: str
    model: str
    prompt_hashes: tuple[tuple[str, str], ...]  # (stage, sha256 hex) pairs

    def __post_init__(self):
        object.__setattr__(
            self, "prompt_hashes", tuple(sorted(tuple(p) for p in self.prompt_hashes))
        )

    def to_dict(self) -> dict:
        return {
            "provider": self.provider,
            "model": self.model,
            "prompt_hashes": {stage: h for stage, h in self.prompt_hashes},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Provenance":
        return cls(
            provider=d["provider"],
            model=d["model"],
            prompt_hashes=tuple(d["prompt_hashes"].items()),
        )


def prompt_hash(template: str) -> str:
    return hashlib.sha256(template.encode("utf-8")).hexdigest()


def card_id_for(article_id: str, domain: str) -> str:
    """Deterministic card id; one card per (article, domain) pair."""
    return hashlib.sha256(f"{article_id}\n{domain}".encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ConsequenceCard:
    """One summarized undesirable consequence, with its aspect and provenance."""

    id: str
    article_id: str
    domain: str
    summary: str
    aspect: Aspect
    provenance: Provenance
    created_at: datetime

    def __post_init__(self):
        _require(isinstance(self.aspect, Aspect), "aspect must be a taxonomy member")
        n = len(self.summary)
        _require(
            SUMMARY_MIN_CHARS <= n <= SUMMARY_MAX_CHARS,
            f"summary length {n} outside [{SUMMARY_MIN_CHARS}, {SUMMARY_MAX_CHARS}]",
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "article_id": self.article_id,
            "domain": self.domain,
            "summary": self.summary,
            "aspect": self.aspect.value,
            "provenance": self.provenance.to_dict(),
            "created_at": self.created_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConsequenceCard":
        return cls(
            id=d["id"],
            article_id=d["article_id"],
            domain=d["domain"],
            summary=d["summary"],
            aspect=parse_aspect(d["aspect"]),
            provenance=Provenance.from_dict(d["provenance"]),
            created_at=datetime.fromisoformat(d["created_at"]),
        )


def canonical_card_json(card: ConsequenceCard) -> bytes:
    """Deterministic canonical serialization of a card.

    Keys sorted lexicographically, UTF-8, no insignificant whitespace: the
    same card always yields identical bytes.
    """
    return json.dumps(
        card.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def card_from_json(data: bytes | str) -> ConsequenceCard:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return ConsequenceCard.from_dict(json.loads(data))


@dataclass(frozen=True)
class SourceCounters:
    """Per-source row of the funnel report."""

    source: str
    retrieved: int
    after_title_filter: int
    after_content_filter: int
    cards_emitted: int

    def __post_init__(self):
        _require(
            self.retrieved >= self.after_title_filter >= self.after_content_filter
            >= self.cards_emitted >= 0,
            f"funnel counts must be monotone, got {self}",
        )

    @property
    def pct_title(self) -> int:
        return int_percent(self.after_title_filter, self.retrieved)

    @property
    def pct_content(self) -> int:
        return int_percent(self.after_content_filter, self.retrieved)


@dataclass(frozen=True)
class PipelineReport:
    """Per-stage retained counts and percentages for one pipeline run."""

    domain: str
    retrieved: int
    after_title_filter: int
    after_content_filter: int
    cards_emitted: int
    per_source: tuple[SourceCounters, ...] = ()
    undetermined: int = 0
    failures: tuple[tuple[str, str, str], ...] = ()  # (article_id, stage, error code)

    def __post_init__(self):
        _require(
            self.retrieved >= self.after_title_filter >= self.after_content_filter
            >= self.cards_emitted >= 0,
            "funnel counts must be monotone",
        )
        object.__setattr__(self, "per_source", tuple(self.per_source))
        object.__setattr__(self, "failures", tuple(tuple(f) for f in self.failures))

    @property
    def pct_title(self) -> int:
        return int_percent(self.after_title_filter, self.retrieved)

    @property
    def pct_content(self) -> int:
        return int_percent(self.after_content_filter, self.retrieved)

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "retrieved": self.retrieved,
            "after_title_filter": self.after_title_filter,
            "after_content_filter": self.after_content_filter,
            "cards_emitted": self.cards_emitted,
            "pct_title": self.pct_title,
            "pct_content": self.pct_content,
            "undetermined": self.undetermined,
            "failures": [list(f) for f in self.failures],
            "per_source": [
                {
                    "source": s.source,
                    "retrieved": s.retrieved,
                    "after_title_filter": s.after_title_filter,
                    "after_content_filter": s.after_content_filter,
                    "cards_emitted": s.cards_emitted,
                    "pct_title": s.pct_title,
                    "pct_content": s.pct_content,
                }
                for s in self.per_source
            ],
        }


def utcnow() -> datetime:
    return datetime.now(timezone.utc)
