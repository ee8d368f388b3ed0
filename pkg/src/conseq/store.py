"""Durable catalog storage on SQLite: domains, articles, cards, bookmarks,
per-client dismissals, pending imports, and exact top-k vector search.

One connection, internally serialized writes, multiple concurrent callers;
every public operation is atomic. Embeddings are computed by an injected
embedder callable (normally Gateway.embed) so the store itself never talks
to a provider directly.
"""

from __future__ import annotations

import json
import random
import secrets
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    InvalidImportState,
    MissingArticle,
    PipelineRejected,
    UnknownCard,
)
from .model import (
    Article,
    Aspect,
    ConsequenceCard,
    TechDomain,
    canonical_card_json,
    utcnow,
)

MAX_PAGE_LIMIT = 200

_SCHEMA = """
CREATE TABLE IF NOT EXISTS domains (
    name TEXT PRIMARY KEY,
    name_folded TEXT NOT NULL UNIQUE,
    keywords TEXT NOT NULL,
    approved INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS articles (
    id TEXT PRIMARY KEY,
    canonical_url TEXT NOT NULL UNIQUE,
    source TEXT NOT NULL,
    title TEXT NOT NULL,
    body TEXT NOT NULL,
    published_at TEXT,
    fetched_at TEXT NOT NULL,
    word_count INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS cards (
    id TEXT PRIMARY KEY,
    article_id TEXT NOT NULL REFERENCES articles(id),
    domain TEXT NOT NULL,
    summary TEXT NOT NULL,
    aspect TEXT NOT NULL,
    provenance TEXT NOT NULL,
    created_at TEXT NOT NULL,
    UNIQUE (article_id, domain)
);
CREATE TABLE IF NOT EXISTS vectors (
    card_id TEXT PRIMARY KEY REFERENCES cards(id) ON DELETE CASCADE,
    dim INTEGER NOT NULL,
    data BLOB NOT NULL
);
CREATE TABLE IF NOT EXISTS clients (
    token TEXT PRIMARY KEY,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS bookmarks (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    client TEXT NOT NULL,
    card_id TEXT NOT NULL REFERENCES cards(id),
    UNIQUE (client, card_id)
);
CREATE TABLE IF NOT EXISTS dismissals (
    client TEXT NOT NULL,
    card_id TEXT NOT NULL REFERENCES cards(id),
    PRIMARY KEY (client, card_id)
);
CREATE TABLE IF NOT EXISTS pending_imports (
    id TEXT PRIMARY KEY,
    submitted_by TEXT NOT NULL,
    url TEXT NOT NULL,
    proposed_domain TEXT NOT NULL,
    card_json TEXT,
    article_json TEXT,
    state TEXT NOT NULL CHECK (state IN ('pending', 'approved', 'rejected')),
    error TEXT,
    submitted_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"""


def new_client_token() -> str:
    # 128 random bits, URL-safe.
    return secrets.token_urlsafe(16)


@dataclass(frozen=True)
class PendingImport:
    id: str
    submitted_by: str
    url: str
    proposed_domain: str
    extracted_card: ConsequenceCard | None
    state: str
    submitted_at: datetime
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "submitted_by": self.submitted_by,
            "url": self.url,
            "proposed_domain": self.proposed_domain,
            "extracted_card": self.extracted_card.to_dict() if self.extracted_card else None,
            "state": self.state,
            "submitted_at": self.submitted_at.isoformat(),
            "error": self.error,
        }


@dataclass(frozen=True)
class CardFilter:
    domains: frozenset[str] | None = None
    aspects: frozenset[Aspect] | None = None
    query: str | None = None
    exclude_for: str | None = None

    def __post_init__(self):
        if self.domains is not None:
            object.__setattr__(self, "domains", frozenset(self.domains))
        if self.aspects is not None:
            object.__setattr__(self, "aspects", frozenset(self.aspects))


class CatalogStore:
    def __init__(
        self,
        path: str | Path,
        *,
        embedder: Callable[[str], np.ndarray] | None = None,
    ):
        self._path = str(path)
        self._embedder = embedder
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(self._path, check_same_thread=False)
        self._conn.execute("PRAGMA foreign_keys = ON")
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- domains ----------------------------------------------------------

    def add_domain(self, domain: TechDomain) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO domains (name, name_folded, keywords, approved) "
                "VALUES (?, ?, ?, ?) "
                "ON CONFLICT(name_folded) DO UPDATE SET "
                "keywords = excluded.keywords, approved = excluded.approved",
                (
                    domain.name,
                    domain.name.casefold(),
                    json.dumps(list(domain.keywords)),
                    int(domain.approved),
                ),
            )

    def get_domain(self, name: str) -> TechDomain | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT name, keywords, approved FROM domains WHERE name_folded = ?",
                (name.casefold(),),
            ).fetchone()
        if row is None:
            return None
        return TechDomain(
            name=row[0], keywords=tuple(json.loads(row[1])), approved=bool(row[2])
        )

    def list_domains(self, *, approved_only: bool = False) -> list[TechDomain]:
        sql = "SELECT name, keywords, approved FROM domains"
        if approved_only:
            sql += " WHERE approved = 1"
        sql += " ORDER BY name"
        with self._lock:
            rows = self._conn.execute(sql).fetchall()
        return [
            TechDomain(name=r[0], keywords=tuple(json.loads(r[1])), approved=bool(r[2]))
            for r in rows
        ]

    # -- articles ----------------------------------------------------------

    def add_article(self, article: Article) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO articles (id, canonical_url, source, title, body, "
                "published_at, fetched_at, word_count) VALUES (?,?,?,?,?,?,?,?) "
                "ON CONFLICT(canonical_url) DO NOTHING",
                (
                    article.id,
                    article.canonical_url,
                    article.source,
                    article.title,
                    article.body,
                    article.published_at.isoformat() if article.published_at else None,
                    article.fetched_at.isoformat(),
                    article.word_count,
                ),
            )

    def has_article_url(self, canonical_url: str) -> bool:
        with self._lock:
            row = self._conn.execute(
                "SELECT 1 FROM articles WHERE canonical_url = ?", (canonical_url,)
            ).fetchone()
        return row is not None

    def get_article(self, article_id: str) -> Article | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT id, canonical_url, source, title, body, published_at, "
                "fetched_at, word_count FROM articles WHERE id = ?",
                (article_id,),
            ).fetchone()
        if row is None:
            return None
        return Article.from_dict(
            {
                "id": row[0],
                "canonical_url": row[1],
                "source": row[2],
                "title": row[3],
                "body": row[4],
                "published_at": row[5],
                "fetched_at": row[6],
                "word_count": row[7],
            }
        )

    def count_articles(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM articles").fetchone()[0]

    # -- cards and vectors --------------------------------------------------

    def _embed(self, text: str) -> np.ndarray:
        if self._embedder is None:
            raise ValueError("store was built without an embedder")
        vec = np.asarray(self._embedder(text), dtype=np.float64)
        norm = float(np.linalg.norm(vec))
        if not 1.0 - 1e-6 <= norm <= 1.0 + 1e-6:
            raise ValueError(f"embedder returned non-unit vector (norm={norm})")
        return vec

    def _check_dim(self, dim: int) -> None:
        row = self._conn.execute("SELECT value FROM meta WHERE key = 'embed_dim'").fetchone()
        if row is None:
            self._conn.execute(
                "INSERT INTO meta (key, value) VALUES ('embed_dim', ?)", (str(dim),)
            )
        elif int(row[0]) != dim:
            raise ValueError(f"vector dim {dim} != index dim {row[0]}")

    def upsert_card(self, card: ConsequenceCard) -> str:
        """Insert or replace by (article_id, domain); the summary embedding
        lands in the vector index in the same transaction."""
        vec = self._embed(card.summary)
        with self._lock, self._conn:
            if (
                self._conn.execute(
                    "SELECT 1 FROM articles WHERE id = ?", (card.article_id,)
                ).fetchone()
                is None
            ):
                raise MissingArticle(f"card references unknown article {card.article_id}")
            self._check_dim(len(vec))
            old = self._conn.execute(
                "SELECT id FROM cards WHERE article_id = ? AND domain = ?",
                (card.article_id, card.domain),
            ).fetchone()
            if old is not None and old[0] == card.id:
                self._conn.execute(
                    "UPDATE cards SET summary = ?, aspect = ?, provenance = ?, "
                    "created_at = ? WHERE id = ?",
                    (
                        card.summary,
                        card.aspect.value,
                        json.dumps(card.provenance.to_dict(), sort_keys=True),
                        card.created_at.isoformat(),
                        card.id,
                    ),
                )
            else:
                if old is not None:
                    # Same (article, domain) under a different id: carry client
                    # state over to the new id, then retire the old row. The
                    # moved bookmarks point at a card row that only exists
                    # after the INSERT below, so FK checks wait for commit.
                    self._conn.execute("PRAGMA defer_foreign_keys = ON")
                    for table in ("bookmarks", "dismissals"):
                        self._conn.execute(
                            f"UPDATE {table} SET card_id = ? WHERE card_id = ?",
                            (card.id, old[0]),
                        )
                    self._conn.execute("DELETE FROM vectors WHERE card_id = ?", (old[0],))
                    self._conn.execute("DELETE FROM cards WHERE id = ?", (old[0],))
                self._conn.execute(
                    "INSERT INTO cards (id, article_id, domain, summary, aspect, "
                    "provenance, created_at) VALUES (?,?,?,?,?,?,?)",
                    (
                        card.id,
                        card.article_id,
                        card.domain,
                        card.summary,
                        card.aspect.value,
                        json.dumps(card.provenance.to_dict(), sort_keys=True),
                        card.created_at.isoformat(),
                    ),
                )
            self._conn.execute(
                "INSERT OR REPLACE INTO vectors (card_id, dim, data) VALUES (?,?,?)",
                (card.id, len(vec), vec.tobytes()),
            )
        return card.id

    def _row_to_card(self, row: Sequence) -> ConsequenceCard:
        return ConsequenceCard.from_dict(
            {
                "id": row[0],
                "article_id": row[1],
                "domain": row[2],
                "summary": row[3],
                "aspect": row[4],
                "provenance": json.loads(row[5]),
                "created_at": row[6],
            }
        )

    _CARD_COLS = "c.id, c.article_id, c.domain, c.summary, c.aspect, c.provenance, c.created_at"

    def get_card(self, card_id: str) -> ConsequenceCard | None:
        with self._lock:
            row = self._conn.execute(
                f"SELECT {self._CARD_COLS} FROM cards c WHERE c.id = ?", (card_id,)
            ).fetchone()
        return None if row is None else self._row_to_card(row)

    def count_cards(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM cards").fetchone()[0]

    def _filtered_cards(self, flt: CardFilter) -> list[tuple[ConsequenceCard, str]]:
        """All cards matching the filter, with article titles, sorted by id."""
        with self._lock:
            rows = self._conn.execute(
                f"SELECT {self._CARD_COLS}, a.title FROM cards c "
                "JOIN articles a ON a.id = c.article_id ORDER BY c.id"
            ).fetchall()
            excluded: set[str] = set()
            if flt.exclude_for is not None:
                excluded = {
                    r[0]
                    for r in self._conn.execute(
                        "SELECT card_id FROM dismissals WHERE client = ?",
                        (flt.exclude_for,),
                    )
                }
        out = []
        needle = flt.query.casefold() if flt.query else None
        for row in rows:
            card = self._row_to_card(row[:7])
            title = row[7]
            if flt.domains is not None and card.domain not in flt.domains:
                continue
            if flt.aspects is not None and card.aspect not in flt.aspects:
                continue
            if needle is not None and (
                needle not in card.summary.casefold() and needle not in title.casefold()
            ):
                continue
            if card.id in excluded:
                continue
            out.append((card, title))
        return out

    def list_cards(
        self,
        flt: CardFilter = CardFilter(),
        *,
        order: str = "newest",
        seed: int | None = None,
        offset: int = 0,
        limit: int = 50,
    ) -> tuple[list[ConsequenceCard], int]:
        """Filtered page of cards plus the total match count.

        order="newest" sorts by created_at descending; order="shuffled"
        applies the deterministic permutation for the given seed, so equal
        seeds page through identical orders.
        """
        if not 1 <= limit <= MAX_PAGE_LIMIT:
            raise ValueError(f"limit must be in [1, {MAX_PAGE_LIMIT}]")
        if offset < 0:
            raise ValueError("offset must be >= 0")
        if order not in ("newest", "shuffled"):
            raise ValueError(f"unknown order {order!r}")
        matches = [card for card, _ in self._filtered_cards(flt)]
        if order == "newest":
            matches.sort(key=lambda c: (c.created_at.isoformat(), c.id), reverse=True)
        else:
            rng = random.Random(seed if seed is not None else secrets.randbits(32))
            rng.shuffle(matches)  # matches arrive sorted by id: stable base order
        return matches[offset : offset + limit], len(matches)

    def semantic_search(
        self, query: str, k: int, flt: CardFilter = CardFilter()
    ) -> list[tuple[ConsequenceCard, float]]:
        """Top-k filtered cards by cosine similarity to the query embedding;
        exact brute force, ties broken by card id ascending."""
        if k < 1:
            raise ValueError("k must be >= 1")
        qvec = self._embed(query)
        candidates = [card for card, _ in self._filtered_cards(flt)]
        if not candidates:
            return []
        with self._lock:
            rows = self._conn.execute(
                "SELECT card_id, dim, data FROM vectors"
            ).fetchall()
        vecs = {r[0]: np.frombuffer(r[2], dtype=np.float64) for r in rows}
        scored = []
        for card in candidates:
            vec = vecs.get(card.id)
            if vec is None or len(vec) != len(qvec):
                continue
            scored.append((card, float(qvec @ vec)))
        scored.sort(key=lambda pair: (-pair[1], pair[0].id))
        return scored[:k]

    # -- bookmarks and dismissals -------------------------------------------

    def _require_card(self, card_id: str) -> None:
        if (
            self._conn.execute("SELECT 1 FROM cards WHERE id = ?", (card_id,)).fetchone()
            is None
        ):
            raise UnknownCard(f"no card with id {card_id}")

    def bookmark(self, client: str, card_id: str) -> None:
        with self._lock, self._conn:
            self._require_card(card_id)
            self._conn.execute(
                "INSERT OR IGNORE INTO bookmarks (client, card_id) VALUES (?, ?)",
                (client, card_id),
            )

    def unbookmark(self, client: str, card_id: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "DELETE FROM bookmarks WHERE client = ? AND card_id = ?",
                (client, card_id),
            )

    def list_bookmarks(self, client: str) -> list[ConsequenceCard]:
        with self._lock:
            rows = self._conn.execute(
                f"SELECT {self._CARD_COLS} FROM bookmarks b "
                "JOIN cards c ON c.id = b.card_id "
                "WHERE b.client = ? ORDER BY b.seq",
                (client,),
            ).fetchall()
        return [self._row_to_card(r) for r in rows]

    def dismiss(self, client: str, card_id: str) -> None:
        with self._lock, self._conn:
            self._require_card(card_id)
            self._conn.execute(
                "INSERT OR IGNORE INTO dismissals (client, card_id) VALUES (?, ?)",
                (client, card_id),
            )

    # -- pending imports ------------------------------------------------------

    def _row_to_pending(self, row: Sequence) -> PendingImport:
        card = None
        if row[4]:
            card = ConsequenceCard.from_dict(json.loads(row[4]))
        return PendingImport(
            id=row[0],
            submitted_by=row[1],
            url=row[2],
            proposed_domain=row[3],
            extracted_card=card,
            state=row[5],
            error=row[6],
            submitted_at=datetime.fromisoformat(row[7]),
        )

    _PENDING_COLS = (
        "id, submitted_by, url, proposed_domain, card_json, state, error, submitted_at"
    )

    def submit_import(
        self,
        client: str,
        url: str,
        proposed_domain: str,
        *,
        runner: Callable[[str, str], tuple[Article, ConsequenceCard]],
        now: Callable[[], datetime] = utcnow,
    ) -> PendingImport:
        """Run the single-URL pipeline and park the result in the approval
        queue. A stage rejection is recorded as a rejected queue item and
        re-raised with the item's id attached."""
        pending_id = secrets.token_hex(8)
        submitted_at = now()
        try:
            article, card = runner(url, proposed_domain)
        except PipelineRejected as exc:
            with self._lock, self._conn:
                self._conn.execute(
                    "INSERT INTO pending_imports (id, submitted_by, url, "
                    "proposed_domain, card_json, article_json, state, error, "
                    "submitted_at) VALUES (?,?,?,?,?,?,?,?,?)",
                    (
                        pending_id,
                        client,
                        url,
                        proposed_domain,
                        None,
                        None,
                        "rejected",
                        f"{exc.stage}: {exc}",
                        submitted_at.isoformat(),
                    ),
                )
            exc.pending_id = pending_id
            raise
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO pending_imports (id, submitted_by, url, proposed_domain, "
                "card_json, article_json, state, error, submitted_at) "
                "VALUES (?,?,?,?,?,?,?,?,?)",
                (
                    pending_id,
                    client,
                    url,
                    proposed_domain,
                    json.dumps(card.to_dict(), sort_keys=True),
                    json.dumps(article.to_dict(), sort_keys=True),
                    "pending",
                    None,
                    submitted_at.isoformat(),
                ),
            )
        return PendingImport(
            id=pending_id,
            submitted_by=client,
            url=url,
            proposed_domain=proposed_domain,
            extracted_card=card,
            state="pending",
            submitted_at=submitted_at,
        )

    def get_import(self, pending_id: str) -> PendingImport | None:
        with self._lock:
            row = self._conn.execute(
                f"SELECT {self._PENDING_COLS} FROM pending_imports WHERE id = ?",
                (pending_id,),
            ).fetchone()
        return None if row is None else self._row_to_pending(row)

    def list_imports(self, *, state: str | None = None) -> list[PendingImport]:
        sql = f"SELECT {self._PENDING_COLS} FROM pending_imports"
        args: tuple = ()
        if state is not None:
            sql += " WHERE state = ?"
            args = (state,)
        sql += " ORDER BY submitted_at, id"
        with self._lock:
            rows = self._conn.execute(sql, args).fetchall()
        return [self._row_to_pending(r) for r in rows]

    def approve_import(self, pending_id: str) -> ConsequenceCard:
        """Publish a pending item: create its domain if new (approved),
        store the article, upsert the card. pending -> approved only."""
        with self._lock:
            row = self._conn.execute(
                "SELECT state, card_json, article_json, proposed_domain "
                "FROM pending_imports WHERE id = ?",
                (pending_id,),
            ).fetchone()
            if row is None:
                raise InvalidImportState(f"no pending import {pending_id}")
            state, card_json, article_json, proposed_domain = row
            if state != "pending":
                raise InvalidImportState(f"cannot approve item in state {state!r}")
            if not card_json or not article_json:
                raise InvalidImportState("pending item has no extracted card")
            card = ConsequenceCard.from_dict(json.loads(card_json))
            article = Article.from_dict(json.loads(article_json))
            if self.get_domain(proposed_domain) is None:
                self.add_domain(
                    TechDomain(
                        name=proposed_domain,
                        keywords=(proposed_domain,),
                        approved=True,
                    )
                )
            self.add_article(article)
            self.upsert_card(card)
            with self._conn:
                self._conn.execute(
                    "UPDATE pending_imports SET state = 'approved' WHERE id = ?",
                    (pending_id,),
                )
        return card

    def reject_import(self, pending_id: str) -> None:
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT state FROM pending_imports WHERE id = ?", (pending_id,)
            ).fetchone()
            if row is None:
                raise InvalidImportState(f"no pending import {pending_id}")
            if row[0] != "pending":
                raise InvalidImportState(f"cannot reject item in state {row[0]!r}")
            self._conn.execute(
                "UPDATE pending_imports SET state = 'rejected' WHERE id = ?",
                (pending_id,),
            )

    # -- export / import -------------------------------------------------------

    def export_catalog(self, cards_path: str | Path, sidecar_path: str | Path) -> None:
        """Write the canonical interchange files: newline-delimited canonical
        card records (sorted by id) plus a JSON sidecar holding domains,
        articles, and pending imports."""
        with self._lock:
            cards = [
                self._row_to_card(r)
                for r in self._conn.execute(
                    f"SELECT {self._CARD_COLS} FROM cards c ORDER BY c.id"
                )
            ]
            articles_rows = self._conn.execute(
                "SELECT id, canonical_url, source, title, body, published_at, "
                "fetched_at, word_count FROM articles ORDER BY id"
            ).fetchall()
            domains = self.list_domains()
            imports = self.list_imports()
        Path(cards_path).write_bytes(
            b"".join(canonical_card_json(c) + b"\n" for c in cards)
        )
        sidecar = {
            "domains": [
                {"name": d.name, "keywords": list(d.keywords), "approved": d.approved}
                for d in domains
            ],
            "articles": [
                {
                    "id": r[0],
                    "canonical_url": r[1],
                    "source": r[2],
                    "title": r[3],
                    "body": r[4],
                    "published_at": r[5],
                    "fetched_at": r[6],
                    "word_count": r[7],
                }
                for r in articles_rows
            ],
            "pending_imports": [p.to_dict() for p in imports],
        }
        Path(sidecar_path).write_text(
            json.dumps(sidecar, sort_keys=True, indent=1, ensure_ascii=False),
            encoding="utf-8",
        )

    def import_catalog(self, cards_path: str | Path, sidecar_path: str | Path) -> int:
        """Load an exported catalog; embeddings are recomputed through the
        configured embedder. Returns the number of cards imported."""
        sidecar = json.loads(Path(sidecar_path).read_text(encoding="utf-8"))
        for d in sidecar.get("domains", []):
            self.add_domain(
                TechDomain(
                    name=d["name"], keywords=tuple(d["keywords"]), approved=d["approved"]
                )
            )
        for a in sidecar.get("articles", []):
            self.add_article(Article.from_dict(a))
        count = 0
        for line in Path(cards_path).read_bytes().splitlines():
            if not line.strip():
                continue
            self.upsert_card(ConsequenceCard.from_dict(json.loads(line)))
            count += 1
        for p in sidecar.get("pending_imports", []):
            with self._lock, self._conn:
                self._conn.execute(
                    "INSERT OR IGNORE INTO pending_imports (id, submitted_by, url, "
                    "proposed_domain, card_json, article_json, state, error, "
                    "submitted_at) VALUES (?,?,?,?,?,?,?,?,?)",
                    (
                        p["id"],
                        p["submitted_by"],
                        p["url"],
                        p["proposed_domain"],
                        json.dumps(p["extracted_card"], sort_keys=True)
                        if p.get("extracted_card")
                        else None,
                        None,
                        p["state"],
                        p.get("error"),
                        p["submitted_at"],
                    ),
                )
        return count
