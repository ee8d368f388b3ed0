"""Exception types shared across the package.

Everything user-facing derives from CatalogError so callers (CLI, API) can
catch one base and map to an error code.
"""

from __future__ import annotations


class CatalogError(Exception):
    """Base class for all domain errors."""

    code = "catalog_error"


# -- core model ---------------------------------------------------------

class UnknownAspect(CatalogError):
    code = "unknown_aspect"


# -- ingestion ----------------------------------------------------------

class MalformedUrl(CatalogError):
    code = "malformed_url"


class NoContent(CatalogError):
    code = "no_content"


class NoTitle(CatalogError):
    code = "no_title"


class FetchError(CatalogError):
    """Network or HTTP failure, wrapped with the source name."""

    code = "fetch_error"

    def __init__(self, source: str, message: str):
        super().__init__(f"{source}: {message}")
        self.source = source


# -- model gateway ------------------------------------------------------

class ProviderUnavailable(CatalogError):
    code = "provider_unavailable"


class BudgetExceeded(CatalogError):
    code = "budget_exceeded"


class DegenerateDataset(CatalogError):
    code = "degenerate_dataset"


# -- curation pipeline --------------------------------------------------

class EmptyTitle(CatalogError):
    code = "empty_title"


class InvalidSummary(CatalogError):
    """Summary failed a validation rule; `rule` names the failing rule."""

    code = "invalid_summary"

    def __init__(self, rule: str, message: str = ""):
        super().__init__(message or rule)
        self.rule = rule


class UncategorizableCard(CatalogError):
    code = "uncategorizable_card"


# -- index store --------------------------------------------------------

class MissingArticle(CatalogError):
    code = "missing_article"


class UnknownCard(CatalogError):
    code = "unknown_card"


class InvalidImportState(CatalogError):
    code = "invalid_import_state"


class PipelineRejected(CatalogError):
    """Single-URL import failed a pipeline stage; `stage` names it."""

    code = "pipeline_rejected"

    def __init__(self, stage: str, message: str = "", pending_id: str | None = None):
        super().__init__(message or f"rejected at stage {stage!r}")
        self.stage = stage
        self.pending_id = pending_id


# -- evalkit ------------------------------------------------------------

class TooFewItems(CatalogError):
    code = "too_few_items"


class LengthMismatch(CatalogError):
    code = "length_mismatch"
