"""Periodic catalog updates on a configurable cadence (default 7 days).

The scheduler never runs the task more than once per elapsed window:
missed windows coalesce into a single catch-up run. Task failures are
logged and recorded; they never propagate, so the next window is
unaffected.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from datetime import datetime
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .ingest.poll import poll_updates
from .ingest.sources import SourceConfig
from .model import PipelineReport, TechDomain, utcnow
from .pipeline import StagePromptSet, DEFAULT_PROMPTS, run_pipeline

log = logging.getLogger(__name__)

DAY_S = 86_400.0


class UpdateScheduler:
    def __init__(
        self,
        task: Callable[[], object],
        *,
        cadence_days: float = 7.0,
        clock: Callable[[], float] = time.monotonic,
    ):
        if cadence_days <= 0:
            raise ValueError("cadence_days must be positive")
        self._task = task
        self._period = cadence_days * DAY_S
        self._clock = clock
        self._next_due = self._clock() + self._period
        self._lock = threading.Lock()
        self.runs = 0
        self.last_error: str | None = None
        self.last_result: object | None = None

    def tick(self) -> bool:
        """Run the task if a window has elapsed. Returns True when a run
        happened. However many windows were missed, at most one run."""
        with self._lock:
            now = self._clock()
            if now < self._next_due:
                return False
            self._next_due = now + self._period
        try:
            self.last_result = self._task()
            self.last_error = None
        except Exception as exc:  # the service must survive any task failure
            log.exception("scheduled update failed")
            self.last_error = str(exc)
        self.runs += 1
        return True

    def run_forever(self, stop: threading.Event, poll_interval_s: float = 60.0) -> None:
        while not stop.is_set():
            self.tick()
            stop.wait(poll_interval_s)


def build_weekly_task(
    store,
    gateway,
    classifier,
    sources: Sequence[SourceConfig],
    *,
    client: httpx.Client | None = None,
    prompts: StagePromptSet = DEFAULT_PROMPTS,
    parallelism: int = 4,
    char_budget: int = 12_000,
    reports_dir: str | Path | None = None,
    now: Callable[[], datetime] = utcnow,
) -> Callable[[], list[PipelineReport]]:
    """The weekly update: poll enabled sources for approved domains,
    pipeline the new articles, publish the resulting cards directly
    (auto-ingested content skips the approval queue), write a dated
    report."""

    def task() -> list[PipelineReport]:
        http = client or httpx.Client(timeout=30.0)
        domains: list[TechDomain] = store.list_domains(approved_only=True)
        result = poll_updates(
            domains, None, sources=sources, store=store, client=http, now=now
        )
        reports: list[PipelineReport] = []
        for domain in domains:
            articles = result.by_domain.get(domain.name, [])
            if not articles:
                continue
            cards, report = run_pipeline(
                articles,
                domain,
                classifier,
                gateway,
                prompts=prompts,
                parallelism=parallelism,
                char_budget=char_budget,
                now=now,
            )
            for card in cards:
                store.upsert_card(card)
            reports.append(report)
        if reports_dir is not None:
            _write_report(Path(reports_dir), reports, result.errors, now())
        return reports

    return task


def _write_report(
    directory: Path,
    reports: Sequence[PipelineReport],
    errors: Sequence[tuple[str, str]],
    at: datetime,
) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    payload = {
        "ran_at": at.isoformat(),
        "reports": [r.to_dict() for r in reports],
        "poll_errors": [list(e) for e in errors],
    }
    out = directory / f"update-{at.strftime('%Y%m%d-%H%M%S')}.json"
    out.write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")
