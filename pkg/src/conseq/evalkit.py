"""Measurement instruments: dataset splitting, confusion-matrix metrics,
inter-annotator agreement, summary-failure screening, and funnel-table
rendering.

Everything here is a pure function; thread-safe by construction.
"""

from __future__ import annotations

import csv
import io
import random
import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, TypeVar

from .errors import LengthMismatch, TooFewItems
from .model import Article, PipelineReport, SourceCounters, int_percent

T = TypeVar("T")

POSITIVE_LABEL = "relevant"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    kappa: float | None = None
    matrix: ConfusionMatrix | None = None

    def to_dict(self) -> dict:
        d = {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "kappa": self.kappa,
        }
        if self.matrix is not None:
            d["matrix"] = {
                "tp": self.matrix.tp,
                "fp": self.matrix.fp,
                "fn": self.matrix.fn,
                "tn": self.matrix.tn,
            }
        return d


def split_train_test(
    items: Sequence[tuple], ratio: float = 0.8, seed: int = 0
) -> tuple[list, list]:
    """Seeded, class-stratified train/test split.

    Items are (value, label) pairs; the label is the second element. The
    split is deterministic per seed and preserves per-class proportions
    within one item.
    """
    if len(items) < 5:
        raise TooFewItems(f"need at least 5 items, got {len(items)}")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be strictly between 0 and 1")
    rng = random.Random(seed)
    order = list(range(len(items)))
    rng.shuffle(order)

    by_class: dict = {}
    for pos in order:
        by_class.setdefault(items[pos][1], []).append(pos)

    train_positions = set()
    for members in by_class.values():
        n_train = int(ratio * len(members) + 0.5)
        train_positions.update(members[:n_train])
    # Emit in global shuffled order so the split order carries no class signal.
    train = [items[pos] for pos in order if pos in train_positions]
    test = [items[pos] for pos in order if pos not in train_positions]
    return train, test


def metrics_from_matrix(cm: ConfusionMatrix) -> MetricsReport:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) > 0 else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) > 0 else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if (precision + recall) > 0
        else 0.0
    )
    return MetricsReport(
        accuracy=accuracy, precision=precision, recall=recall, f1=f1, matrix=cm
    )


def compute_metrics(preds: Sequence[str], labels: Sequence[str]) -> MetricsReport:
    """Binary classification metrics with "relevant" as the positive class."""
    if len(preds) != len(labels):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(labels)} labels")
    if not preds:
        raise LengthMismatch("empty prediction list")
    tp = fp = fn = tn = 0
    for p, y in zip(preds, labels):
        if p == POSITIVE_LABEL:
            if y == POSITIVE_LABEL:
                tp += 1
            else:
                fp += 1
        else:
            if y == POSITIVE_LABEL:
                fn += 1
            else:
                tn += 1
    return metrics_from_matrix(ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn))


def raw_agreement(ann_a: Sequence, ann_b: Sequence) -> float:
    """Fraction of items both annotators labeled identically (p_o)."""
    if len(ann_a) != len(ann_b):
        raise LengthMismatch(f"{len(ann_a)} vs {len(ann_b)} annotations")
    if not ann_a:
        raise LengthMismatch("empty annotation list")
    return sum(a == b for a, b in zip(ann_a, ann_b)) / len(ann_a)


def cohen_kappa(ann_a: Sequence, ann_b: Sequence) -> float:
    """Chance-corrected agreement between two annotators.

    kappa = (p_o - p_e) / (1 - p_e) with p_e from the marginal label
    distributions. When p_e = 1 the statistic is defined as 1 for perfect
    agreement and 0 otherwise.

    Computed in exact rational arithmetic with a single final float
    conversion, so equal inputs can never give unequal outputs across
    platforms.
    """
    if len(ann_a) != len(ann_b):
        raise LengthMismatch(f"{len(ann_a)} vs {len(ann_b)} annotations")
    n = len(ann_a)
    if n == 0:
        raise LengthMismatch("empty annotation list")
    po = Fraction(sum(a == b for a, b in zip(ann_a, ann_b)), n)
    counts_a = Counter(ann_a)
    counts_b = Counter(ann_b)
    pe = Fraction(0)
    for label, ca in counts_a.items():
        pe += Fraction(ca, n) * Fraction(counts_b.get(label, 0), n)
    if pe == 1:
        return 1.0 if po == 1 else 0.0
    return float((po - pe) / (1 - pe))


# --- summary screening ------------------------------------------------------

_WORD_RE = re.compile(r"[a-z0-9']+")

# Small closed-class list; enough to separate content words from glue.
_STOPWORDS = frozenset(
    """
    a an the this that these those it its they them their he she his her we us
    our you your i me my of in on at by for with from to into over under about
    and or but nor so yet as if then than because while where when which who
    whom whose what how why is are was were be been being am do does did done
    doing have has had having will would can could shall should may might must
    not no nor only very too also just more most much many some any all both
    each few other such own same s t don now there here up down out off again
    further once
    """.split()
)

HALLUCINATION_OVERLAP_MIN = 0.30
DEGENERATION_MAX_RUN = 8
DEGENERATION_DISTINCT_MIN = 0.30
DECONTEXT_MIN_CHARS = 60
NOUN_LIKE_MIN_LEN = 4

FLAG_HALLUCINATION = "hallucination_risk"
FLAG_NO_CONSEQUENCE = "no_consequence"
FLAG_DEGENERATION = "degeneration"
FLAG_DECONTEXTUALIZED = "decontextualized"


def _tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _content_words(text: str) -> list[str]:
    return [t for t in _tokens(text) if t not in _STOPWORDS]


def _longest_run(tokens: Sequence[str]) -> int:
    best = run = 0
    prev = None
    for t in tokens:
        run = run + 1 if t == prev else 1
        prev = t
        best = max(best, run)
    return best


def screen_summary(summary: str, article: Article) -> list[str]:
    """Advisory failure flags for a generated summary.

    Flags are a screening aid, not ground truth: hallucination_risk when
    too few of the summary's content words occur in the article,
    degeneration on heavy repetition, decontextualized when the summary is
    too short or shares no substantive word with the source. The
    no_consequence flag comes from the filter verdict and is attached by
    callers, never by this function.
    """
    if not summary.strip():
        raise ValueError("summary must be non-empty")
    flags: list[str] = []

    article_words = set(_tokens(article.title)) | set(_tokens(article.body))
    content = _content_words(summary)
    if content:
        overlap = sum(w in article_words for w in content) / len(content)
        if overlap < HALLUCINATION_OVERLAP_MIN:
            flags.append(FLAG_HALLUCINATION)

    tokens = _tokens(summary)
    if tokens:
        if (
            _longest_run(tokens) > DEGENERATION_MAX_RUN
            or len(set(tokens)) / len(tokens) < DEGENERATION_DISTINCT_MIN
        ):
            flags.append(FLAG_DEGENERATION)

    noun_like_shared = any(
        len(w) >= NOUN_LIKE_MIN_LEN and w in article_words for w in content
    )
    if len(summary.strip()) < DECONTEXT_MIN_CHARS or not noun_like_shared:
        flags.append(FLAG_DECONTEXTUALIZED)

    return flags


# --- funnel table -----------------------------------------------------------

FUNNEL_HEADER = ["News Source", "Retrieved", "Title Filter", "Content Filter"]

_CELL_RE = re.compile(r"^(\d+) \((\d+)%\)$")


def _funnel_cell(count: int, retrieved: int) -> str:
    return f"{count} ({int_percent(count, retrieved)}%)"


def render_funnel_table(report: PipelineReport) -> str:
    """Render the funnel as CSV: one row per source plus a Total row.

    Columns: News Source, Retrieved, Title Filter "count (pct%)", Content
    Filter "count (pct%)"; percentages relative to that row's retrieved
    count.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FUNNEL_HEADER)
    for row in report.per_source:
        writer.writerow(
            [
                row.source,
                str(row.retrieved),
                _funnel_cell(row.after_title_filter, row.retrieved),
                _funnel_cell(row.after_content_filter, row.retrieved),
            ]
        )
    writer.writerow(
        [
            "Total",
            str(report.retrieved),
            _funnel_cell(report.after_title_filter, report.retrieved),
            _funnel_cell(report.after_content_filter, report.retrieved),
        ]
    )
    return buf.getvalue()


def parse_funnel_table(text: str) -> PipelineReport:
    """Inverse of render_funnel_table (card counts are not in the table, so
    they come back as the content-filter counts, the tightest bound the
    table carries)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != FUNNEL_HEADER:
        raise ValueError("not a funnel table")
    per_source = []
    total = None
    for row in rows[1:]:
        source, retrieved_s, title_cell, content_cell = row
        m_t = _CELL_RE.match(title_cell)
        m_c = _CELL_RE.match(content_cell)
        if m_t is None or m_c is None:
            raise ValueError(f"bad funnel cell in row {row!r}")
        counters = SourceCounters(
            source=source,
            retrieved=int(retrieved_s),
            after_title_filter=int(m_t.group(1)),
            after_content_filter=int(m_c.group(1)),
            cards_emitted=int(m_c.group(1)),
        )
        if source == "Total":
            total = counters
        else:
            per_source.append(counters)
    if total is None:
        raise ValueError("funnel table missing Total row")
    return PipelineReport(
        domain="",
        retrieved=total.retrieved,
        after_title_filter=total.after_title_filter,
        after_content_filter=total.after_content_filter,
        cards_emitted=total.cards_emitted,
        per_source=tuple(per_source),
    )


def read_eval_csv(text: str) -> list[tuple[str, ...]]:
    """Read an eval dataset: header row, then (text, label) or
    (text, label_a, label_b) rows."""
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2:
        raise ValueError("eval CSV needs a header row and at least one data row")
    width = len(rows[0])
    if width not in (2, 3):
        raise ValueError("eval CSV must have 2 or 3 columns")
    out = []
    for row in rows[1:]:
        if len(row) != width:
            raise ValueError(f"ragged eval CSV row: {row!r}")
        out.append(tuple(row))
    return out
