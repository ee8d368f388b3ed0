"""Shared fixtures: the golden article corpus, deterministic classifiers,
factories for model objects, and a fake clock for schedule-sensitive tests.
"""

from __future__ import annotations

import json
import random
from datetime import date, datetime, timezone
from pathlib import Path

import pytest

from conseq.gateway.core import Gateway
from conseq.gateway.mock import MockProvider, load_rules
from conseq.model import (
    Article,
    Aspect,
    ConsequenceCard,
    Provenance,
    TechDomain,
    card_id_for,
)
from conseq.store import CatalogStore

DATA_DIR = Path(__file__).parent / "data"

FIXED_NOW = datetime(2025, 7, 1, 12, 0, tzinfo=timezone.utc)

# Titles the stub classifier passes in the golden end-to-end run.
GOLDEN_PASSING_TITLES = frozenset(
    {
        "Endless feeds are wrecking teen sleep",
        "Recommendation engines reward outrage",
        "Influencer culture and the new status anxiety",
        "Targeted ads quietly profile your friends",
        "The creator fund pays out millions",
        "Platforms court regulators in Brussels",
        "Feed redesign ships to every account this week",
    }
)


class StubTitleClassifier:
    """Scores 0.92 for titles in the passing set, 0.08 otherwise."""

    def __init__(self, passing: frozenset[str] = GOLDEN_PASSING_TITLES):
        self.passing = passing

    def predict(self, title: str) -> float:
        return 0.92 if title in self.passing else 0.08


class PermissiveClassifier:
    def predict(self, title: str) -> float:
        return 1.0


class FakeClock:
    """Manual monotonic clock; sleep() advances it and logs the request."""

    def __init__(self, start: float = 1000.0):
        self.now = start
        self.sleeps: list[float] = []

    def __call__(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)
        self.now += seconds

    def advance(self, seconds: float) -> None:
        self.now += seconds


def load_golden_articles() -> list[Article]:
    lines = (DATA_DIR / "golden_articles.ndjson").read_text(encoding="utf-8")
    return [Article.from_dict(json.loads(l)) for l in lines.splitlines() if l.strip()]


def load_mock_rules():
    return load_rules((DATA_DIR / "mock_rules.json").read_text(encoding="utf-8"))


def make_gateway(**kwargs) -> Gateway:
    return Gateway(MockProvider(load_mock_rules()), **kwargs)


def fast_embedder():
    """Unthrottled embedding function for store-heavy tests."""
    return Gateway(MockProvider(), rpm=1_000_000).embed


def make_article(
    n: int = 0,
    *,
    source: str = "example.test",
    title: str | None = None,
    body: str | None = None,
    published_at: date | None = None,
) -> Article:
    url = f"https://{source}/post/{n}"
    return Article(
        id=f"{n:016x}",
        canonical_url=url,
        source=source,
        title=title or f"Article number {n} about technology",
        body=body or (f"word{n} " + "filler content for the body " * 12).strip(),
        fetched_at=FIXED_NOW,
        published_at=published_at,
    )


def make_card(
    article: Article,
    domain: str = "social media",
    *,
    summary: str | None = None,
    aspect: Aspect = Aspect.HEALTH_WELLBEING,
    created_at: datetime = FIXED_NOW,
) -> ConsequenceCard:
    return ConsequenceCard(
        id=card_id_for(article.id, domain),
        article_id=article.id,
        domain=domain,
        summary=summary
        or f"that the technology in article {article.id} erodes daily life in a measurable way.",
        aspect=aspect,
        provenance=Provenance(
            provider="mock",
            model="rule-table-v1",
            prompt_hashes=(("summary", "0" * 64),),
        ),
        created_at=created_at,
    )


def build_separable_corpus(n_per_class: int = 100, seed: int = 42):
    """Synthetic title corpus with disjoint harm/launch vocabularies, used
    by the baseline-classifier quality gate."""
    harm_heads = [
        "The hidden toll of",
        "How algorithms worsen",
        "The dark side of",
        "Why regulators fear",
        "The privacy cost of",
        "Addiction by design in",
        "Bias baked into",
        "The surveillance problem with",
    ]
    launch_heads = [
        "Hands on with",
        "Review: the new",
        "Launch day for",
        "First look at",
        "Benchmarking the latest",
        "Unboxing the",
        "Our favorite deals on",
        "Everything announced at",
    ]
    topics = [
        "facial recognition",
        "social feeds",
        "smart speakers",
        "ride hailing",
        "delivery drones",
        "chat assistants",
        "fitness trackers",
        "cloud gaming",
        "photo filters",
        "smart doorbells",
        "robo advisors",
        "voice cloning",
        "ad targeting",
    ]
    tails_bad = [
        "harms teens",
        "erodes trust",
        "deepens inequality",
        "invades privacy",
        "fuels misinformation",
        "exploits workers",
        "wrecks attention spans",
    ]
    tails_good = [
        "is finally here",
        "impresses reviewers",
        "ships this fall",
        "gets a price cut",
        "tops our charts",
        "sells out fast",
        "wins the keynote",
    ]
    rng = random.Random(seed)
    corpus = []
    for _ in range(n_per_class):
        corpus.append(
            (f"{rng.choice(harm_heads)} {rng.choice(topics)}: {rng.choice(tails_bad)}", True)
        )
    for _ in range(n_per_class):
        corpus.append(
            (
                f"{rng.choice(launch_heads)} {rng.choice(topics)}: {rng.choice(tails_good)}",
                False,
            )
        )
    rng.shuffle(corpus)
    return corpus


@pytest.fixture
def store(tmp_path):
    gw = Gateway(MockProvider(), rpm=1_000_000)  # embeds must not throttle tests
    s = CatalogStore(tmp_path / "catalog.db", embedder=gw.embed)
    yield s
    s.close()


@pytest.fixture
def golden_articles():
    return load_golden_articles()


@pytest.fixture
def golden_gateway():
    return make_gateway()
