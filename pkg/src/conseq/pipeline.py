"""The three-stage distillation: title filter, content filter, then
summarize and categorize, with funnel accounting.

Stage prompts are completion-style templates with <domain>, <title>, and
<summary> placeholders. The templates are load-bearing: downstream golden
files and the acceptance suite pin their exact bytes, so any edit here is
a breaking change.
"""

from __future__ import annotations

import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from typing import Callable, Protocol, Sequence

from .errors import (
    CatalogError,
    EmptyTitle,
    InvalidSummary,
    PipelineRejected,
    UncategorizableCard,
    UnknownAspect,
)
from .gateway.core import CompletionRequest, Gateway
from .model import (
    Article,
    Aspect,
    ConsequenceCard,
    FilterDecision,
    PipelineReport,
    Provenance,
    SourceCounters,
    TechDomain,
    canonical_card_json,
    card_id_for,
    parse_aspect,
    prompt_hash,
    utcnow,
)

CONTENT_FILTER_TEMPLATE = (
    "Does the article above discuss unintended or undesirable consequences"
    " on society of <domain>? Answer Yes or No."
)

SUMMARY_TEMPLATE = (
    "To summarize in a short paragraph, the main undesirable consequence"
    " of <domain> being discussed here is"
)

ASPECT_LIST = ", ".join(a.value for a in Aspect)

ASPECT_TEMPLATE = (
    f"List of possible aspects: {ASPECT_LIST}\n"
    "Which aspect of life does the following consequence affect?\n"
    "\n"
    "Title: <title>\n"
    "\n"
    "Summary: <summary>\n"
    "\n"
    "Aspect:"
)

TRUNCATION_CHAR_BUDGET = 12_000
RELEVANCE_THRESHOLD = 0.5
CONTENT_MAX_TOKENS = 3
SUMMARY_MAX_TOKENS = 256
ASPECT_MAX_TOKENS = 8
SUMMARY_MIN_CHARS = 30
SUMMARY_MAX_CHARS = 1500
MAX_CONSECUTIVE_REPEATS = 8
DEFAULT_PARALLELISM = 4


@dataclass(frozen=True)
class StagePromptSet:
    content_filter_template: str = CONTENT_FILTER_TEMPLATE
    summary_template: str = SUMMARY_TEMPLATE
    aspect_template: str = ASPECT_TEMPLATE

    def __post_init__(self):
        if not self.content_filter_template.endswith("Answer Yes or No."):
            raise ValueError('content filter template must end with "Answer Yes or No."')
        if not self.summary_template.endswith("being discussed here is"):
            raise ValueError('summary template must end with "being discussed here is"')
        for placeholder, template in (
            ("<domain>", self.content_filter_template),
            ("<domain>", self.summary_template),
            ("<title>", self.aspect_template),
            ("<summary>", self.aspect_template),
        ):
            if placeholder not in template:
                raise ValueError(f"missing {placeholder} in template")

    def provenance_hashes(self) -> tuple[tuple[str, str], ...]:
        return (
            ("content_filter", prompt_hash(self.content_filter_template)),
            ("summary", prompt_hash(self.summary_template)),
            ("aspect", prompt_hash(self.aspect_template)),
        )


DEFAULT_PROMPTS = StagePromptSet()


class TitleClassifier(Protocol):
    def predict(self, title: str) -> float: ...


def truncate_at_word(text: str, budget: int) -> str:
    """Head-first truncation to at most budget chars, never mid-word."""
    if len(text) <= budget:
        return text
    cut = text[:budget]
    if not text[budget].isspace():
        head, sep, _ = cut.rpartition(" ")
        if sep:
            cut = head
    return cut.rstrip()


def filter_title(title: str, classifier: TitleClassifier) -> FilterDecision:
    if not title.strip():
        raise EmptyTitle("cannot filter an empty title")
    score = float(classifier.predict(title))
    verdict = "relevant" if score >= RELEVANCE_THRESHOLD else "irrelevant"
    return FilterDecision(stage="title", verdict=verdict, raw=f"score={score:.6f}", score=score)


def build_content_filter_prompt(
    article: Article,
    domain: TechDomain,
    *,
    prompts: StagePromptSet = DEFAULT_PROMPTS,
    char_budget: int = TRUNCATION_CHAR_BUDGET,
) -> str:
    body = truncate_at_word(article.body, char_budget)
    question = prompts.content_filter_template.replace("<domain>", domain.name)
    return f"{body}\n\n{question}"


def _leading_token(text: str) -> str:
    head = text.split(maxsplit=1)
    if not head:
        return ""
    return head[0].strip(string.punctuation).casefold()


def filter_content(
    article: Article,
    domain: TechDomain,
    gateway: Gateway,
    *,
    prompts: StagePromptSet = DEFAULT_PROMPTS,
    char_budget: int = TRUNCATION_CHAR_BUDGET,
) -> FilterDecision:
    prompt = build_content_filter_prompt(
        article, domain, prompts=prompts, char_budget=char_budget
    )
    response = gateway.complete(
        CompletionRequest(
            prompt=prompt, max_tokens=CONTENT_MAX_TOKENS, temperature=0.0, tag="content_filter"
        )
    )
    token = _leading_token(response.text)
    if token == "yes":
        verdict = "relevant"
    elif token == "no":
        verdict = "irrelevant"
    else:
        verdict = "undetermined"
    return FilterDecision(
        stage="content", verdict=verdict, raw=response.text or "(empty completion)"
    )


def validate_summary(summary: str) -> None:
    n = len(summary)
    if n < SUMMARY_MIN_CHARS:
        raise InvalidSummary("too_short", f"summary is {n} chars (< {SUMMARY_MIN_CHARS})")
    if n > SUMMARY_MAX_CHARS:
        raise InvalidSummary("too_long", f"summary is {n} chars (> {SUMMARY_MAX_CHARS})")
    tokens = summary.split()
    run, prev = 0, None
    for tok in tokens:
        run = run + 1 if tok == prev else 1
        prev = tok
        if run > MAX_CONSECUTIVE_REPEATS:
            raise InvalidSummary(
                "degeneration", f"token {tok!r} repeats > {MAX_CONSECUTIVE_REPEATS} times"
            )
    if not any(t in summary for t in ".!?"):
        raise InvalidSummary("no_sentence", "summary has no sentence terminator")


def summarize(
    article: Article,
    domain: TechDomain,
    gateway: Gateway,
    *,
    prompts: StagePromptSet = DEFAULT_PROMPTS,
    char_budget: int = TRUNCATION_CHAR_BUDGET,
) -> str:
    body = truncate_at_word(article.body, char_budget)
    instruction = prompts.summary_template.replace("<domain>", domain.name)
    response = gateway.complete(
        CompletionRequest(
            prompt=f"{body}\n\n{instruction}",
            max_tokens=SUMMARY_MAX_TOKENS,
            temperature=0.0,
            tag="summary",
        )
    )
    summary = response.text.strip()
    validate_summary(summary)
    return summary


def build_aspect_prompt(
    title: str, summary: str, *, prompts: StagePromptSet = DEFAULT_PROMPTS
) -> str:
    return prompts.aspect_template.replace("<title>", title).replace("<summary>", summary)


def categorize(
    title: str,
    summary: str,
    gateway: Gateway,
    *,
    prompts: StagePromptSet = DEFAULT_PROMPTS,
) -> Aspect:
    prompt = build_aspect_prompt(title, summary, prompts=prompts)
    request = CompletionRequest(
        prompt=prompt, max_tokens=ASPECT_MAX_TOKENS, temperature=0.0, tag="aspect"
    )
    last_raw = ""
    for _ in range(2):  # one retry on an unparseable label
        response = gateway.complete(request)
        last_raw = response.text
        label = response.text.strip().splitlines()[0].strip() if response.text.strip() else ""
        try:
            return parse_label(label)
        except UnknownAspect:
            continue
    raise UncategorizableCard(f"model output not an aspect after retry: {last_raw!r}")


def parse_label(label: str) -> Aspect:
    return parse_aspect(label.strip().strip(".").strip())


@dataclass
class _ArticleOutcome:
    article: Article
    title_passed: bool = False
    content_verdict: str = ""
    card: ConsequenceCard | None = None
    failure: tuple[str, str] | None = None  # (stage, error code)


def _process_article(
    article: Article,
    domain: TechDomain,
    classifier: TitleClassifier,
    gateway: Gateway,
    prompts: StagePromptSet,
    char_budget: int,
    now: Callable[[], datetime],
) -> _ArticleOutcome:
    outcome = _ArticleOutcome(article=article)
    stage = "title"
    try:
        if filter_title(article.title, classifier).verdict != "relevant":
            return outcome
        outcome.title_passed = True
        stage = "content"
        decision = filter_content(
            article, domain, gateway, prompts=prompts, char_budget=char_budget
        )
        outcome.content_verdict = decision.verdict
        if decision.verdict != "relevant":
            return outcome
        stage = "summary"
        summary = summarize(
            article, domain, gateway, prompts=prompts, char_budget=char_budget
        )
        stage = "aspect"
        aspect = categorize(article.title, summary, gateway, prompts=prompts)
        outcome.card = ConsequenceCard(
            id=card_id_for(article.id, domain.name),
            article_id=article.id,
            domain=domain.name,
            summary=summary,
            aspect=aspect,
            provenance=Provenance(
                provider=gateway.provider_name,
                model=gateway.model_name,
                prompt_hashes=prompts.provenance_hashes(),
            ),
            created_at=now(),
        )
    except CatalogError as exc:
        outcome.failure = (stage, exc.code)
    return outcome


def run_pipeline(
    articles: Sequence[Article],
    domain: TechDomain,
    classifier: TitleClassifier,
    gateway: Gateway,
    *,
    prompts: StagePromptSet = DEFAULT_PROMPTS,
    char_budget: int = TRUNCATION_CHAR_BUDGET,
    parallelism: int = DEFAULT_PARALLELISM,
    now: Callable[[], datetime] = utcnow,
    progress: Callable[[int], None] | None = None,
) -> tuple[list[ConsequenceCard], PipelineReport]:
    """Run all stages over a batch.

    Per-article failures are recorded in the report, never raised; the
    emitted card list is sorted by article id so output is independent of
    worker scheduling. The optional progress callback receives the count
    of completed articles, in submission order.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def work(article: Article) -> _ArticleOutcome:
        return _process_article(
            article, domain, classifier, gateway, prompts, char_budget, now
        )

    outcomes = []
    if parallelism == 1 or len(articles) <= 1:
        for a in articles:
            outcomes.append(work(a))
            if progress:
                progress(len(outcomes))
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            for outcome in pool.map(work, articles):
                outcomes.append(outcome)
                if progress:
                    progress(len(outcomes))

    cards = sorted(
        (o.card for o in outcomes if o.card is not None), key=lambda c: c.article_id
    )
    report = _build_report(domain.name, outcomes)
    return cards, report


def _build_report(domain_name: str, outcomes: Sequence[_ArticleOutcome]) -> PipelineReport:
    def counters(subset: Sequence[_ArticleOutcome]) -> dict:
        return {
            "retrieved": len(subset),
            "after_title_filter": sum(o.title_passed for o in subset),
            "after_content_filter": sum(o.content_verdict == "relevant" for o in subset),
            "cards_emitted": sum(o.card is not None for o in subset),
        }

    per_source = []
    for source in sorted({o.article.source for o in outcomes}):
        subset = [o for o in outcomes if o.article.source == source]
        per_source.append(SourceCounters(source=source, **counters(subset)))

    return PipelineReport(
        domain=domain_name,
        per_source=tuple(per_source),
        undetermined=sum(o.content_verdict == "undetermined" for o in outcomes),
        failures=tuple(
            (o.article.id, o.failure[0], o.failure[1]) for o in outcomes if o.failure
        ),
        **counters(outcomes),
    )


def run_single(
    article: Article,
    domain: TechDomain,
    classifier: TitleClassifier,
    gateway: Gateway,
    *,
    prompts: StagePromptSet = DEFAULT_PROMPTS,
    char_budget: int = TRUNCATION_CHAR_BUDGET,
    now: Callable[[], datetime] = utcnow,
) -> ConsequenceCard:
    """All stages for one article; any stage rejection raises
    PipelineRejected naming the stage (the single-URL import path)."""
    if filter_title(article.title, classifier).verdict != "relevant":
        raise PipelineRejected("title", f"title filter rejected {article.id}")
    decision = filter_content(
        article, domain, gateway, prompts=prompts, char_budget=char_budget
    )
    if decision.verdict != "relevant":
        raise PipelineRejected(
            "content", f"content filter verdict was {decision.verdict!r}"
        )
    try:
        summary = summarize(
            article, domain, gateway, prompts=prompts, char_budget=char_budget
        )
    except InvalidSummary as exc:
        raise PipelineRejected("summary", str(exc)) from exc
    try:
        aspect = categorize(article.title, summary, gateway, prompts=prompts)
    except UncategorizableCard as exc:
        raise PipelineRejected("aspect", str(exc)) from exc
    return ConsequenceCard(
        id=card_id_for(article.id, domain.name),
        article_id=article.id,
        domain=domain.name,
        summary=summary,
        aspect=aspect,
        provenance=Provenance(
            provider=gateway.provider_name,
            model=gateway.model_name,
            prompt_hashes=prompts.provenance_hashes(),
        ),
        created_at=now(),
    )


def write_golden_cards(cards: Sequence[ConsequenceCard]) -> bytes:
    """Golden card file: canonical serialization, one record per line,
    sorted by card id."""
    lines = [canonical_card_json(c) for c in sorted(cards, key=lambda c: c.id)]
    return b"\n".join(lines) + (b"\n" if lines else b"")
