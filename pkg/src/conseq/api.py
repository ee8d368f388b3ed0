"""HTTP service exposing the catalog: card listing and search, bookmarks,
dismissals, the import approval queue, admin bulk import, and taxonomy
metadata for the UI.

Every error response has the shape {"code": ..., "message": ...}; the
status code travels on the HTTP envelope. Client identity is an opaque
token in the X-Client-Token header, issued on first contact and echoed on
every response. Admin routes require the configured bearer credential.
"""

from __future__ import annotations

import csv
import io
import json
import secrets
import threading
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable
from urllib.parse import urlsplit

import httpx
from fastapi import Depends, FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .config import Config, load_sources
from .errors import (
    BudgetExceeded,
    CatalogError,
    FetchError,
    InvalidImportState,
    MalformedUrl,
    MissingArticle,
    NoContent,
    NoTitle,
    PipelineRejected,
    ProviderUnavailable,
    UnknownAspect,
    UnknownCard,
)
from .ingest.extract import extract_article
from .ingest.sources import fetch_page, search_source
from .ingest.urls import canonicalize_url
from .model import ASPECT_COLORS, Article, Aspect, TechDomain, parse_aspect, utcnow
from .pipeline import run_pipeline, run_single
from .store import MAX_PAGE_LIMIT, CardFilter, CatalogStore, new_client_token

CLIENT_TOKEN_HEADER = "X-Client-Token"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, **extra):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.extra = extra


_ERROR_STATUS: list[tuple[type, int]] = [
    (UnknownCard, 404),
    (MalformedUrl, 400),
    (UnknownAspect, 400),
    (InvalidImportState, 409),
    (MissingArticle, 409),
    (PipelineRejected, 422),
    (NoContent, 422),
    (NoTitle, 422),
    (ProviderUnavailable, 503),
    (BudgetExceeded, 429),
    (FetchError, 502),
]


def _status_for(exc: CatalogError) -> int:
    for etype, status in _ERROR_STATUS:
        if isinstance(exc, etype):
            return status
    return 400


def run_bulk_tasks(
    store: CatalogStore,
    gateway,
    classifier,
    config: Config,
    tasks: list[tuple[str, str]],
    *,
    client: httpx.Client,
    now: Callable[[], datetime] = utcnow,
    on_progress: Callable[[int], None] | None = None,
) -> dict:
    """Fetch, extract, and pipeline a list of (url, domain) tasks,
    publishing the resulting cards. Returns {domains: [funnel reports],
    fetch_errors: [...]} for the job record / CLI output."""
    by_domain: dict[str, list[Article]] = {}
    fetch_errors: list[dict] = []
    done = 0
    for url, domain_name in tasks:
        try:
            canonical = canonicalize_url(url)
            source = urlsplit(canonical).hostname or "unknown"
            page = fetch_page(canonical, source, client)
            article = extract_article(page, canonical, source, fetched_at=now())
            store.add_article(article)
            by_domain.setdefault(domain_name, []).append(article)
        except CatalogError as exc:
            fetch_errors.append({"url": url, "code": exc.code, "message": str(exc)})
        finally:
            done += 1
            if on_progress:
                on_progress(done)
    reports = []
    for domain_name, articles in sorted(by_domain.items()):
        domain = store.get_domain(domain_name)
        if domain is None:
            domain = TechDomain(name=domain_name, keywords=(domain_name,), approved=True)
            store.add_domain(domain)
        cards, report = run_pipeline(
            articles,
            domain,
            classifier,
            gateway,
            parallelism=config.parallelism,
            char_budget=config.truncation_chars,
            now=now,
        )
        for card in cards:
            store.upsert_card(card)
        reports.append(report)
    return {"domains": [r.to_dict() for r in reports], "fetch_errors": fetch_errors}


@dataclass
class BulkJob:
    id: str
    state: str = "running"  # running | done | failed
    total: int = 0
    processed: int = 0
    report: dict | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "state": self.state,
            "progress": {"processed": self.processed, "total": self.total},
            "report": self.report,
            "error": self.error,
        }


@dataclass
class _JobRegistry:
    lock: threading.Lock = field(default_factory=threading.Lock)
    jobs: dict[str, BulkJob] = field(default_factory=dict)

    def start(self) -> BulkJob:
        with self.lock:
            if any(j.state == "running" for j in self.jobs.values()):
                raise ApiError(409, "job_running", "a bulk job is already running")
            job = BulkJob(id=secrets.token_hex(8))
            self.jobs[job.id] = job
            return job


def create_app(
    store: CatalogStore,
    gateway,
    classifier,
    config: Config,
    *,
    http_client: httpx.Client | None = None,
    now: Callable[[], datetime] = utcnow,
    scheduler=None,
) -> FastAPI:
    app = FastAPI(title="conseq", docs_url=None, redoc_url=None, openapi_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=[CLIENT_TOKEN_HEADER],
    )
    client = http_client or httpx.Client(timeout=30.0, follow_redirects=True)
    jobs = _JobRegistry()
    worker = ThreadPoolExecutor(max_workers=1, thread_name_prefix="bulk")
    importer = ThreadPoolExecutor(max_workers=2, thread_name_prefix="import")
    app.state.store = store
    app.state.scheduler = scheduler

    # -- error shaping ------------------------------------------------------

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        body = {"code": exc.code, "message": exc.message, **exc.extra}
        return JSONResponse(status_code=exc.status, content=body)

    @app.exception_handler(CatalogError)
    async def _catalog_error(request: Request, exc: CatalogError):
        body = {"code": exc.code, "message": str(exc)}
        if isinstance(exc, PipelineRejected):
            body["stage"] = exc.stage
            if exc.pending_id:
                body["pending_id"] = exc.pending_id
        return JSONResponse(status_code=_status_for(exc), content=body)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "validation_error", "message": str(exc.errors()[:3])},
        )

    @app.exception_handler(Exception)
    async def _unhandled(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"code": "internal_error", "message": type(exc).__name__},
        )

    # -- auth / identity ------------------------------------------------------

    def client_token(request: Request, response: Response) -> str:
        token = request.headers.get(CLIENT_TOKEN_HEADER) or new_client_token()
        response.headers[CLIENT_TOKEN_HEADER] = token
        return token

    def require_admin(request: Request) -> None:
        expected = config.admin_token
        supplied = request.headers.get("Authorization", "")
        if not expected or supplied != f"Bearer {expected}":
            raise ApiError(401, "unauthorized", "admin credential required")

    # -- helpers ----------------------------------------------------------------

    def parse_filters(
        domains: list[str] | None,
        aspects: list[str] | None,
        q: str | None,
        token: str | None,
    ) -> CardFilter:
        domain_set = None
        if domains:
            domain_set = frozenset(d for item in domains for d in item.split(",") if d)
        aspect_set = None
        if aspects:
            aspect_set = frozenset(
                parse_aspect(a) for item in aspects for a in item.split(",") if a
            )
        return CardFilter(
            domains=domain_set, aspects=aspect_set, query=q or None, exclude_for=token
        )

    def card_json(card) -> dict:
        # Cards render with the source article's title and link, so embed the
        # few article fields the UI needs instead of forcing a second fetch.
        body = card.to_dict()
        article = store.get_article(card.article_id)
        body["article"] = (
            {
                "title": article.title,
                "url": article.canonical_url,
                "source": article.source,
            }
            if article is not None
            else None
        )
        return body

    def import_runner(url: str, domain_name: str):
        canonical = canonicalize_url(url)
        source = urlsplit(canonical).hostname or "unknown"
        page = fetch_page(canonical, source, client)
        article = extract_article(page, canonical, source, fetched_at=now())
        domain = store.get_domain(domain_name) or TechDomain(
            name=domain_name, keywords=(domain_name,)
        )
        card = run_single(
            article,
            domain,
            classifier,
            gateway,
            char_budget=config.truncation_chars,
            now=now,
        )
        return article, card

    # -- cards ----------------------------------------------------------------

    @app.get("/cards")
    def list_cards(
        request: Request,
        q: str | None = None,
        order: str = "shuffled",
        seed: int | None = None,
        offset: int = 0,
        limit: int = 50,
        token: str = Depends(client_token),
    ):
        if limit > MAX_PAGE_LIMIT:
            raise ApiError(400, "limit_exceeded", f"limit must be <= {MAX_PAGE_LIMIT}")
        if limit < 1 or offset < 0:
            raise ApiError(400, "bad_page", "offset must be >= 0 and limit >= 1")
        if order not in ("shuffled", "newest"):
            raise ApiError(400, "bad_order", "order must be 'shuffled' or 'newest'")
        if order == "shuffled" and seed is None:
            seed = secrets.randbits(31)
        flt = parse_filters(
            request.query_params.getlist("domains"),
            request.query_params.getlist("aspects"),
            q,
            token,
        )
        cards, total = store.list_cards(
            flt, order=order, seed=seed, offset=offset, limit=limit
        )
        return {
            "cards": [card_json(c) for c in cards],
            "total": total,
            "order": order,
            "seed": seed,
            "offset": offset,
            "limit": limit,
        }

    @app.get("/cards/search")
    def search_cards(
        request: Request,
        q: str,
        k: int = 10,
        token: str = Depends(client_token),
    ):
        if k < 1 or k > 100:
            raise ApiError(400, "bad_k", "k must be in [1, 100]")
        if not q.strip():
            raise ApiError(400, "empty_query", "q must be non-empty")
        flt = parse_filters(
            request.query_params.getlist("domains"),
            request.query_params.getlist("aspects"),
            None,
            token,
        )
        results = store.semantic_search(q, k, flt)
        return {
            "results": [
                {"card": card_json(card), "score": score} for card, score in results
            ]
        }

    @app.get("/cards/{card_id}")
    def get_card(card_id: str, token: str = Depends(client_token)):
        card = store.get_card(card_id)
        if card is None:
            raise UnknownCard(f"no card with id {card_id}")
        return {"card": card_json(card)}

    # -- bookmarks / dismissals --------------------------------------------------

    @app.post("/bookmarks/{card_id}")
    def add_bookmark(card_id: str, token: str = Depends(client_token)):
        store.bookmark(token, card_id)
        return {"status": "ok"}

    @app.delete("/bookmarks/{card_id}")
    def remove_bookmark(card_id: str, token: str = Depends(client_token)):
        store.unbookmark(token, card_id)
        return {"status": "ok"}

    @app.get("/bookmarks")
    def get_bookmarks(token: str = Depends(client_token)):
        return {"cards": [card_json(c) for c in store.list_bookmarks(token)]}

    @app.post("/dismissals/{card_id}")
    def add_dismissal(card_id: str, token: str = Depends(client_token)):
        store.dismiss(token, card_id)
        return {"status": "ok"}

    # -- imports ------------------------------------------------------------------

    @app.post("/imports")
    def submit_import(payload: dict, token: str = Depends(client_token)):
        url = payload.get("url", "")
        domain = payload.get("domain", "")
        if not url or not domain:
            raise ApiError(400, "missing_fields", "url and domain are required")
        future = importer.submit(
            store.submit_import, token, url, domain, runner=import_runner, now=now
        )
        try:
            pending = future.result(timeout=config.import_timeout_s)
        except FutureTimeout:
            raise ApiError(
                503, "import_timeout", f"import exceeded {config.import_timeout_s}s"
            )
        return {"pending": pending.to_dict()}

    @app.get("/imports")
    def list_imports(
        state: str | None = None, _admin: None = Depends(require_admin)
    ):
        if state is not None and state not in ("pending", "approved", "rejected"):
            raise ApiError(400, "bad_state", "state must be pending|approved|rejected")
        return {"imports": [p.to_dict() for p in store.list_imports(state=state)]}

    @app.post("/imports/{pending_id}/approve")
    def approve_import(pending_id: str, _admin: None = Depends(require_admin)):
        card = store.approve_import(pending_id)
        return {"card": card_json(card)}

    @app.post("/imports/{pending_id}/reject")
    def reject_import(pending_id: str, _admin: None = Depends(require_admin)):
        store.reject_import(pending_id)
        return {"status": "ok"}

    # -- admin bulk import ---------------------------------------------------------

    def _parse_bulk_csv(text: str, default_domain: str | None) -> list[tuple[str, str]]:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ApiError(400, "bad_csv", "empty CSV body")
        header = [h.strip().lower() for h in rows[0]]
        if "url" not in header:
            raise ApiError(400, "bad_csv", "header row must contain a 'url' column")
        url_col = header.index("url")
        domain_col = header.index("domain") if "domain" in header else None
        out: list[tuple[str, str]] = []
        for row in rows[1:]:
            if not row or not row[url_col].strip():
                continue
            domain = (
                row[domain_col].strip()
                if domain_col is not None and len(row) > domain_col and row[domain_col].strip()
                else default_domain
            )
            if not domain:
                raise ApiError(
                    400, "bad_csv", "no domain column and no default domain given"
                )
            out.append((row[url_col].strip(), domain))
        if not out:
            raise ApiError(400, "bad_csv", "no data rows in CSV body")
        return out

    def _run_bulk_job(job: BulkJob, tasks: list[tuple[str, str]]):
        def on_progress(done: int) -> None:
            job.processed = done

        try:
            job.total = len(tasks)
            job.report = run_bulk_tasks(
                store,
                gateway,
                classifier,
                config,
                tasks,
                client=client,
                now=now,
                on_progress=on_progress,
            )
            job.state = "done"
        except Exception as exc:
            job.state = "failed"
            job.error = f"{type(exc).__name__}: {exc}"

    @app.post("/admin/bulk-import")
    async def bulk_import(
        request: Request,
        domain: str | None = None,
        _admin: None = Depends(require_admin),
    ):
        content_type = request.headers.get("content-type", "")
        body = await request.body()
        tasks: list[tuple[str, str]]
        if "json" in content_type:
            spec = json.loads(body or b"{}")
            keywords = spec.get("keywords") or []
            domain_name = spec.get("domain") or domain
            if not domain_name or not keywords:
                raise ApiError(400, "bad_spec", "JSON body needs domain and keywords")
            limit = int(spec.get("limit", 10))
            sources = load_sources(config)
            urls: list[str] = []
            for source in sources:
                if not source.enabled:
                    continue
                for keyword in keywords:
                    try:
                        urls.extend(
                            search_source(source, keyword, limit, client=client)
                        )
                    except FetchError:
                        continue
            tasks = [(u, domain_name) for u in dict.fromkeys(urls)]
            if not tasks:
                raise ApiError(400, "no_results", "keyword search found no URLs")
        else:
            tasks = _parse_bulk_csv(body.decode("utf-8", errors="replace"), domain)
        job = jobs.start()
        worker.submit(_run_bulk_job, job, tasks)
        return {"job_id": job.id}

    @app.get("/admin/jobs/{job_id}")
    def get_job(job_id: str, _admin: None = Depends(require_admin)):
        job = jobs.jobs.get(job_id)
        if job is None:
            raise ApiError(404, "unknown_job", f"no job {job_id}")
        return job.to_dict()

    # -- metadata -------------------------------------------------------------------

    @app.get("/meta/aspects")
    def meta_aspects():
        return {
            "aspects": [
                {"name": aspect.value, "color": ASPECT_COLORS[aspect]}
                for aspect in Aspect
            ]
        }

    @app.get("/meta/domains")
    def meta_domains():
        return {
            "domains": [
                {"name": d.name, "approved": d.approved} for d in store.list_domains()
            ]
        }

    @app.get("/meta/status")
    def meta_status():
        sched = app.state.scheduler
        return {
            "cards": store.count_cards(),
            "articles": store.count_articles(),
            "scheduler": None
            if sched is None
            else {"runs": sched.runs, "last_error": sched.last_error},
        }

    return app
