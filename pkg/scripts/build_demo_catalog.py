#!/usr/bin/env python3
"""Regenerate the demo catalog under data/demo/.

Ten articles across three domains run through the real pipeline against the
offline rule-table provider, one card per aspect, then the catalog is
exported as cards.ndjson + sidecar.json (the files `conseq serve --demo-dir`
seeds from). All timestamps are pinned so reruns are byte-identical.

Usage: python3 scripts/build_demo_catalog.py [--out data/demo]
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import tempfile
from datetime import datetime, timedelta, timezone
from pathlib import Path

from conseq.gateway.core import Gateway
from conseq.gateway.mock import MockProvider
from conseq.model import Article, TechDomain
from conseq.pipeline import run_single
from conseq.store import CatalogStore

BASE = datetime(2025, 6, 30, 9, 0, tzinfo=timezone.utc)

DOMAINS = {
    "social media": ("social media", "social network", "feed"),
    "facial recognition": ("facial recognition", "face matching"),
    "delivery drones": ("delivery drone", "drone delivery"),
}

# (domain, source, title, marker, body, summary, aspect)
DEMO_ARTICLES = [
    (
        "social media",
        "citybeat.example",
        "Endless scrolling is breaking teenage sleep",
        "sleep debt",
        "Pediatricians in three districts say the sleep debt among their"
        " teenage patients keeps widening, and the charts point at the"
        " phone. Feeds that refresh forever give no natural stopping point,"
        " so bedtime slides past midnight on school nights. Parents who"
        " confiscate chargers report shouting matches; clinicians report"
        " falling grades and morning headaches. The platforms say screen"
        " time dashboards already exist, but the defaults never change and"
        " the autoplay never pauses.",
        "Bottomless feeds erase every natural stopping point, so teenagers"
        " trade hours of sleep for one more scroll and arrive at school"
        " exhausted.",
        "Health & Well-being",
    ),
    (
        "social media",
        "citybeat.example",
        "Outrage travels six times faster on ranked feeds",
        "outrage velocity",
        "Researchers measuring outrage velocity across four platforms found"
        " that indignant posts spread roughly six times faster than neutral"
        " corrections. Ranking systems reward whatever keeps thumbs moving,"
        " and nothing moves thumbs like anger. Local officials describe"
        " rumor cycles that outrun any correction they publish, and"
        " moderators concede the queue is sorted by engagement, not by"
        " accuracy. The correction, when it lands, reaches a tenth of the"
        " audience the rumor found.",
        "Ranking systems tuned for engagement push indignant rumors far"
        " faster than corrections, so public conversation tilts toward"
        " whatever angers the most people.",
        "Information & Discourse",
    ),
    (
        "social media",
        "citybeat.example",
        "Streak culture is rewriting teenage friendship",
        "streak pressure",
        "School counselors describe streak pressure as the new social"
        " contract: miss a day and the friendship itself is called into"
        " question. Teenagers hand their passwords to siblings before"
        " camping trips so the counter never resets. What used to be a"
        " visit or a phone call is now a daily token exchange, and the app"
        " decides what counts as loyalty. Several students interviewed said"
        " they no longer remember why the streak mattered, only that ending"
        " it would mean something.",
        "Daily streak counters turn friendship into an obligation ledger,"
        " pressuring teenagers to perform constant small exchanges in place"
        " of actual contact.",
        "Social Norms & Relationships",
    ),
    (
        "social media",
        "citybeat.example",
        "Autoplay is engineered to never let go",
        "autoplay trap",
        "Interface designers interviewed about the autoplay trap describe"
        " countdown timers tuned to start the next episode before the"
        " credits finish, thumbnails chosen by click-through experiments,"
        " and a deliberate absence of any visible end. Viewers who planned"
        " on one video surface an hour later unsure what they watched."
        " Former employees say internal metrics celebrate session length"
        " while user surveys quietly record regret, and the two numbers"
        " never appear on the same dashboard.",
        "Autoplay and engagement-tuned recommendations stretch a planned"
        " five-minute visit into an hour viewers later regret, by design"
        " rather than by accident.",
        "User Experience & Entertainment",
    ),
    (
        "facial recognition",
        "metrowire.example",
        "Face matching fails darker-skinned residents first",
        "biased match",
        "Audit logs released after a records request show the biased match"
        " rate clearly: residents with darker skin were flagged as possible"
        " suspects at several times the rate of lighter-skinned residents,"
        " and nearly all of those flags were later dismissed. Two men spent"
        " a night in custody over matches a human reviewer overturned in"
        " minutes. The vendor calls the gap a calibration artifact; the"
        " civil rights clinic calls it the predictable result of training"
        " data that skews pale.",
        "Error rates concentrate on darker-skinned residents, so the people"
        " misidentified, detained, and forced to clear their names are"
        " overwhelmingly from the same communities.",
        "Equality & Justice",
    ),
    (
        "facial recognition",
        "metrowire.example",
        "Shop cameras quietly build a city-wide face database",
        "silent enrollment",
        "A chain of convenience stores has been running silent enrollment"
        " for two years: every customer face captured, hashed, and pooled"
        " into a shared watchlist no shopper ever agreed to join. The"
        " signage says cameras are in use for safety; it does not say the"
        " footage becomes a biometric profile traded between franchises."
        " Privacy lawyers note there is no removal process, no retention"
        " limit, and no way to learn whether you are on the list at all.",
        "Retail cameras enroll every passing face into a shared biometric"
        " watchlist without consent, retention limits, or any way to find"
        " out you are on it.",
        "Security & Privacy",
    ),
    (
        "facial recognition",
        "metrowire.example",
        "One vendor now controls the city's watchlist",
        "vendor watchlist",
        "Procurement records show the vendor watchlist contract renews"
        " automatically and exempts the match algorithm from outside audit."
        " The company alone decides which faces go on the list, which"
        " agencies may query it, and what accuracy claims appear in the"
        " annual report the council never questions. When a councilwoman"
        " asked for the error rate by neighborhood, the reply cited trade"
        " secrets. The city can cancel, officials admit, but no longer"
        " knows how to run its own cameras.",
        "A single private vendor decides who goes on the city's watchlist"
        " and shields the algorithm from audit, leaving elected officials"
        " unable to oversee a system they legally own.",
        "Power",
    ),
    (
        "delivery drones",
        "harborpost.example",
        "Drone corridors are emptying the harbor's birdsong",
        "rotor noise",
        "Ornithologists logging rotor noise along the new delivery"
        " corridors count a third fewer nesting pairs than last spring."
        " The drones fly at treetop height every eleven minutes, and the"
        " constant mechanical whine drives shorebirds off the mudflats"
        " they have used for decades. Residents describe a sky that hums"
        " from breakfast to dusk. The operator's environmental filing"
        " measured noise at the warehouse fence line, not along the"
        " waterfront where every flight actually passes.",
        "Constant low-altitude delivery flights blanket the waterfront in"
        " rotor noise, driving nesting birds off the flats and replacing"
        " quiet with an all-day mechanical hum.",
        "Environment & Sustainability",
    ),
    (
        "delivery drones",
        "harborpost.example",
        "Same-day drones are squeezing the corner store",
        "corner store margin",
        "Accountants reviewing the corner store margin across the district"
        " say same-day drone delivery has cut walk-in traffic by a fifth."
        " The neighborhood shop used to win on immediacy: milk now, not"
        " tomorrow. When a warehouse twenty miles away lands the same"
        " carton on the doorstep in forty minutes, immediacy belongs to"
        " whoever owns the airspace. Three shops on one street closed this"
        " year, and the jobs replacing them are gig contracts loading"
        " crates at the depot.",
        "Same-day drone delivery strips the corner store of its one"
        " advantage, immediacy, shifting neighborhood spending toward"
        " warehouse operators and gig loading work.",
        "Economy",
    ),
    (
        "delivery drones",
        "harborpost.example",
        "Drone lobbying is rewriting local airspace law",
        "airspace lobby",
        "Minutes from the aviation subcommittee show the airspace lobby"
        " drafted the ordinance language that later passed unchanged: a"
        " blanket preemption stripping neighborhoods of any say over"
        " flight paths below four hundred feet. Council members received"
        " model bills, charter flights to the operator's showcase city,"
        " and polling memos warning against standing athwart progress."
        " The residents' association learned the corridor over their"
        " street was final when the signs went up.",
        "Operator lobbying quietly preempts neighborhood authority over"
        " low-altitude flight paths, moving airspace decisions from public"
        " meetings to model bills written by the industry.",
        "Politics",
    ),
]


def build_rules() -> list[dict]:
    rules: list[dict] = []
    for _, _, _, marker, _, summary, aspect in DEMO_ARTICLES:
        rules.append({"match": [marker, "Answer Yes or No."], "response": "Yes"})
        rules.append(
            {"match": [marker, "being discussed here is"], "response": " " + summary}
        )
        # Key aspect routing on a fragment unique to this summary.
        fragment = summary.split(",")[0]
        rules.append(
            {"match": [fragment, "Which aspect of life"], "response": aspect}
        )
    # The import-dialog demo: one page that passes, one the content filter
    # declines (exercised by the frontend end-to-end checks).
    rules.append(
        {"match": ["weekend roundup", "Answer Yes or No."], "response": "No"}
    )
    return rules


def article_for(index: int, entry: tuple) -> Article:
    domain, source, title, _, body, _, _ = entry
    url = f"https://{source}/stories/{index + 1:02d}"
    return Article(
        id=hashlib.sha256(url.encode("utf-8")).hexdigest()[:16],
        canonical_url=url,
        source=source,
        title=title,
        body=body,
        fetched_at=BASE + timedelta(hours=index),
        published_at=(BASE - timedelta(days=2, hours=-index)).date(),
    )


class _Permissive:
    def predict(self, title: str) -> float:
        return 1.0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/demo", help="output directory")
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rules = build_rules()
    gateway = Gateway(
        MockProvider(tuple(rules)), rpm=1_000_000  # local generation, no pacing
    )

    with tempfile.TemporaryDirectory() as tmp:
        store = CatalogStore(Path(tmp) / "demo.db", embedder=gateway.embed)
        for name, keywords in DOMAINS.items():
            store.add_domain(TechDomain(name=name, keywords=keywords, approved=True))
        for i, entry in enumerate(DEMO_ARTICLES):
            article = article_for(i, entry)
            store.add_article(article)
            domain = store.get_domain(entry[0])
            stamp = BASE + timedelta(hours=i)
            card = run_single(
                article, domain, _Permissive(), gateway, now=lambda s=stamp: s
            )
            assert card.aspect.value == entry[6], (card.aspect, entry[6])
            store.upsert_card(card)
        store.export_catalog(out / "cards.ndjson", out / "sidecar.json")
        count = store.count_cards()
        store.close()

    (out / "mock_rules.json").write_text(
        json.dumps(rules, indent=1, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(f"wrote {count} cards to {out}/", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
