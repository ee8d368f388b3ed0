"""conseq: a self-updating catalog of undesirable consequences of digital
technologies, distilled from online articles and served as filterable,
bookmarkable cards.

The package is organized as:

    model       shared domain types, aspect taxonomy, canonical serialization
    ingest      URL canonicalization, article extraction, source search, polling
    gateway     completion/embedding providers (HTTP + deterministic mock),
                retries, rate limiting, cost accounting, baseline classifier
    pipeline    title filter -> content filter -> summarize -> categorize
    store       durable catalog: cards, bookmarks, dismissals, pending imports,
                exact top-k vector search
    api         HTTP service and scheduler
    evalkit     splits, confusion metrics, kappa, summary screening, funnel CSV
"""

from .model import (
    Aspect,
    Article,
    ConsequenceCard,
    FilterDecision,
    PipelineReport,
    Provenance,
    TechDomain,
    canonical_card_json,
    card_from_json,
    parse_aspect,
)

__all__ = [
    "Aspect",
    "Article",
    "ConsequenceCard",
    "FilterDecision",
    "PipelineReport",
    "Provenance",
    "TechDomain",
    "canonical_card_json",
    "card_from_json",
    "parse_aspect",
]

__version__ = "0.1.0"
