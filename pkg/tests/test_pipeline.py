"""Distillation pipeline: stage prompt bytes, filter verdicts, summary
validation, categorization retry, and the frozen golden-batch run."""

from __future__ import annotations

import hashlib

import pytest
from hypothesis import given, settings, strategies as st

from conseq.errors import (
    EmptyTitle,
    InvalidSummary,
    PipelineRejected,
    UncategorizableCard,
)
from conseq.gateway.core import CompletionRequest, CompletionResponse, Gateway
from conseq.gateway.mock import MockProvider, MockRule
from conseq.model import Aspect, TechDomain, card_id_for, prompt_hash
from conseq.pipeline import (
    ASPECT_LIST,
    ASPECT_TEMPLATE,
    CONTENT_FILTER_TEMPLATE,
    DEFAULT_PROMPTS,
    SUMMARY_TEMPLATE,
    StagePromptSet,
    build_aspect_prompt,
    build_content_filter_prompt,
    categorize,
    filter_content,
    filter_title,
    parse_label,
    run_pipeline,
    run_single,
    summarize,
    truncate_at_word,
    validate_summary,
    write_golden_cards,
)

from conftest import (
    DATA_DIR,
    FIXED_NOW,
    PermissiveClassifier,
    StubTitleClassifier,
    load_golden_articles,
    make_article,
    make_gateway,
)

DOMAIN = TechDomain(name="social media", keywords=("social",), approved=True)

VALID_SUMMARY = (
    "that endless notification streams fragment attention and crowd out"
    " sustained offline focus."
)


class ScriptedProvider:
    """Returns canned completions in order, recording every request."""

    name = "scripted"
    model = "scripted-v1"

    def __init__(self, replies):
        self._replies = list(replies)
        self.requests: list[CompletionRequest] = []

    def complete_once(self, request: CompletionRequest) -> CompletionResponse:
        self.requests.append(request)
        text = self._replies.pop(0) if self._replies else ""
        return CompletionResponse(
            text=text,
            prompt_tokens=len(request.prompt.split()),
            completion_tokens=len(text.split()),
            provider=self.name,
            model=self.model,
            latency_ms=0.0,
        )

    def embed_once(self, text):
        raise AssertionError("no embeddings expected here")


class TestTemplates:
    def test_content_filter_template_bytes(self):
        assert CONTENT_FILTER_TEMPLATE == (
            "Does the article above discuss unintended or undesirable"
            " consequences on society of <domain>? Answer Yes or No."
        )

    def test_summary_template_bytes(self):
        assert SUMMARY_TEMPLATE == (
            "To summarize in a short paragraph, the main undesirable"
            " consequence of <domain> being discussed here is"
        )

    def test_aspect_list_bytes(self):
        assert ASPECT_LIST == (
            "Economy, Environment & Sustainability, Equality & Justice,"
            " Information & Discourse, Health & Well-being, Politics, Power,"
            " Security & Privacy, User Experience & Entertainment,"
            " Social Norms & Relationships"
        )

    def test_aspect_template_bytes(self):
        assert ASPECT_TEMPLATE == (
            f"List of possible aspects: {ASPECT_LIST}\n"
            "Which aspect of life does the following consequence affect?\n"
            "\n"
            "Title: <title>\n"
            "\n"
            "Summary: <summary>\n"
            "\n"
            "Aspect:"
        )

    def test_content_prompt_rendering(self):
        body = "Streaming doorbells record every neighbor walking past."
        art = make_article(1, body=body)
        domain = TechDomain(name="smart doorbells", keywords=("doorbell",), approved=True)
        assert build_content_filter_prompt(art, domain) == (
            body
            + "\n\nDoes the article above discuss unintended or undesirable"
            " consequences on society of smart doorbells? Answer Yes or No."
        )

    def test_content_prompt_truncates_body(self):
        art = make_article(1, body="alpha beta gamma delta")
        prompt = build_content_filter_prompt(art, DOMAIN, char_budget=10)
        assert prompt.startswith("alpha beta\n\nDoes the article above")

    def test_aspect_prompt_rendering(self):
        assert build_aspect_prompt("T", "S") == (
            f"List of possible aspects: {ASPECT_LIST}\n"
            "Which aspect of life does the following consequence affect?\n"
            "\n"
            "Title: T\n"
            "\n"
            "Summary: S\n"
            "\n"
            "Aspect:"
        )

    def test_provenance_hashes_cover_all_stages(self):
        hashes = DEFAULT_PROMPTS.provenance_hashes()
        assert [stage for stage, _ in hashes] == ["content_filter", "summary", "aspect"]
        for (_, digest), template in zip(
            hashes, (CONTENT_FILTER_TEMPLATE, SUMMARY_TEMPLATE, ASPECT_TEMPLATE)
        ):
            assert digest == prompt_hash(template)
            assert digest == hashlib.sha256(template.encode("utf-8")).hexdigest()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"content_filter_template": "Is <domain> bad? Reply."},
            {"content_filter_template": "Answer Yes or No."},  # no <domain>
            {"summary_template": "Summarize <domain> please"},
            {"aspect_template": "Summary: <summary>\nAspect:"},  # no <title>
            {"aspect_template": "Title: <title>\nAspect:"},  # no <summary>
        ],
    )
    def test_template_overrides_validated(self, kwargs):
        with pytest.raises(ValueError):
            StagePromptSet(**kwargs)


class TestTruncateAtWord:
    def test_short_text_unchanged(self):
        assert truncate_at_word("alpha beta", 50) == "alpha beta"

    def test_exact_budget_unchanged(self):
        assert truncate_at_word("alpha beta", 10) == "alpha beta"

    def test_cut_lands_on_space(self):
        # budget 10 ends right at a word boundary, keep both words
        assert truncate_at_word("alpha beta gamma", 10) == "alpha beta"

    def test_cut_mid_word_backs_up(self):
        assert truncate_at_word("alpha beta gamma", 9) == "alpha"

    def test_single_long_word_cut_hard(self):
        assert truncate_at_word("abcdefghij", 5) == "abcde"

    def test_no_trailing_space(self):
        out = truncate_at_word("alpha      beta", 8)
        assert out == "alpha"

    @given(
        text=st.text(alphabet=st.sampled_from("ab "), max_size=60),
        budget=st.integers(min_value=1, max_value=30),
    )
    @settings(max_examples=200)
    def test_prefix_and_budget_properties(self, text, budget):
        out = truncate_at_word(text, budget)
        assert out == text[: len(out)]
        if len(text) <= budget:
            assert out == text
        else:
            assert len(out) <= budget
            assert not out.endswith(" ")


class TestFilterTitle:
    def test_empty_title_rejected(self):
        with pytest.raises(EmptyTitle):
            filter_title("", PermissiveClassifier())
        with pytest.raises(EmptyTitle):
            filter_title("   ", PermissiveClassifier())

    def test_threshold_is_inclusive(self):
        class Half:
            def predict(self, title):
                return 0.5

        decision = filter_title("anything", Half())
        assert decision.verdict == "relevant"
        assert decision.stage == "title"
        assert decision.score == 0.5

    def test_below_threshold_irrelevant(self):
        decision = filter_title("Best phone cases", StubTitleClassifier())
        assert decision.verdict == "irrelevant"
        assert decision.score == pytest.approx(0.08)

    def test_raw_records_score(self):
        decision = filter_title("x", PermissiveClassifier())
        assert decision.raw == "score=1.000000"


class TestFilterContent:
    def _decision(self, reply):
        provider = ScriptedProvider([reply])
        art = make_article(3, body="Plain body words " * 20)
        return filter_content(art, DOMAIN, Gateway(provider)), provider

    @pytest.mark.parametrize(
        "reply, verdict",
        [
            (" Yes", "relevant"),
            ("Yes, definitely.", "relevant"),
            (" No", "irrelevant"),
            ("No.", "irrelevant"),
            (" Maybe", "undetermined"),
            ("It depends", "undetermined"),
        ],
    )
    def test_verdicts(self, reply, verdict):
        decision, _ = self._decision(reply)
        assert decision.verdict == verdict
        assert decision.stage == "content"
        assert decision.raw == reply

    def test_empty_completion_is_undetermined(self):
        decision, _ = self._decision("")
        assert decision.verdict == "undetermined"
        assert decision.raw == "(empty completion)"

    def test_request_shape(self):
        _, provider = self._decision(" Yes")
        (request,) = provider.requests
        assert request.max_tokens == 3
        assert request.temperature == 0.0
        assert request.tag == "content_filter"
        assert request.prompt.endswith("? Answer Yes or No.")


class TestValidateSummary:
    def test_valid_summary_passes(self):
        validate_summary(VALID_SUMMARY)

    def test_too_short(self):
        with pytest.raises(InvalidSummary) as exc:
            validate_summary("that it is bad.")
        assert exc.value.rule == "too_short"

    def test_too_long(self):
        with pytest.raises(InvalidSummary) as exc:
            validate_summary("that " + "word " * 400 + "ends.")
        assert exc.value.rule == "too_long"

    def test_degeneration_after_eight_repeats(self):
        with pytest.raises(InvalidSummary) as exc:
            validate_summary("that users scroll " + "scroll " * 9 + "at night.")
        assert exc.value.rule == "degeneration"

    def test_eight_repeats_is_allowed(self):
        validate_summary("that users scroll " + "very " * 8 + "late at night.")

    def test_no_sentence_terminator(self):
        with pytest.raises(InvalidSummary) as exc:
            validate_summary("that attention spans shrink without any ending")
        assert exc.value.rule == "no_sentence"


class TestSummarize:
    def _article(self):
        return make_article(4, body="Body words here " * 30)

    def test_returns_stripped_text(self):
        provider = ScriptedProvider([f"  {VALID_SUMMARY}  "])
        out = summarize(self._article(), DOMAIN, Gateway(provider))
        assert out == VALID_SUMMARY

    def test_request_shape(self):
        provider = ScriptedProvider([VALID_SUMMARY])
        summarize(self._article(), DOMAIN, Gateway(provider))
        (request,) = provider.requests
        assert request.max_tokens == 256
        assert request.tag == "summary"
        assert request.prompt.endswith(
            "\n\nTo summarize in a short paragraph, the main undesirable"
            " consequence of social media being discussed here is"
        )

    def test_invalid_summary_raises(self):
        provider = ScriptedProvider(["too short."])
        with pytest.raises(InvalidSummary):
            summarize(self._article(), DOMAIN, Gateway(provider))


class TestCategorize:
    def test_clean_label(self):
        provider = ScriptedProvider([" Economy"])
        assert categorize("T", VALID_SUMMARY, Gateway(provider)) == Aspect.ECONOMY
        (request,) = provider.requests
        assert request.max_tokens == 8
        assert request.tag == "aspect"

    def test_trailing_period_tolerated(self):
        provider = ScriptedProvider([" Health & Well-being."])
        assert categorize("T", VALID_SUMMARY, Gateway(provider)) == Aspect.HEALTH_WELLBEING

    def test_multiline_reply_uses_first_line(self):
        provider = ScriptedProvider([" Politics\nBecause the summary says so"])
        assert categorize("T", VALID_SUMMARY, Gateway(provider)) == Aspect.POLITICS

    def test_one_retry_on_garbage(self):
        provider = ScriptedProvider([" the vibes", " Power"])
        assert categorize("T", VALID_SUMMARY, Gateway(provider)) == Aspect.POWER
        assert len(provider.requests) == 2
        assert provider.requests[0].prompt == provider.requests[1].prompt

    def test_two_garbage_replies_fail(self):
        provider = ScriptedProvider([" the vibes", " still the vibes"])
        with pytest.raises(UncategorizableCard) as exc:
            categorize("T", VALID_SUMMARY, Gateway(provider))
        assert "still the vibes" in str(exc.value)
        assert len(provider.requests) == 2

    def test_empty_replies_fail(self):
        provider = ScriptedProvider(["", ""])
        with pytest.raises(UncategorizableCard):
            categorize("T", VALID_SUMMARY, Gateway(provider))


class TestParseLabel:
    @pytest.mark.parametrize(
        "label, aspect",
        [
            ("Economy.", Aspect.ECONOMY),
            (" equality and justice ", Aspect.EQUALITY_JUSTICE),
            ("SECURITY & PRIVACY.", Aspect.SECURITY_PRIVACY),
        ],
    )
    def test_lenient_parses(self, label, aspect):
        assert parse_label(label) == aspect


class TestRunSingle:
    def _by_title(self, articles, word):
        return next(a for a in articles if word in a.title)

    def test_success_builds_card(self, golden_articles, golden_gateway):
        art = self._by_title(golden_articles, "teen sleep")
        card = run_single(
            art, DOMAIN, StubTitleClassifier(), golden_gateway, now=lambda: FIXED_NOW
        )
        assert card.id == card_id_for(art.id, "social media")
        assert card.article_id == art.id
        assert card.aspect == Aspect.HEALTH_WELLBEING
        assert card.created_at == FIXED_NOW
        assert card.provenance.provider == "mock"
        assert card.provenance.model == "rule-table-v1"
        assert card.provenance.prompt_hashes == tuple(
            sorted(DEFAULT_PROMPTS.provenance_hashes())
        )

    def test_title_rejection(self, golden_articles, golden_gateway):
        art = self._by_title(golden_articles, "phone cases")
        with pytest.raises(PipelineRejected) as exc:
            run_single(art, DOMAIN, StubTitleClassifier(), golden_gateway)
        assert exc.value.stage == "title"

    def test_content_rejection(self, golden_articles, golden_gateway):
        art = self._by_title(golden_articles, "creator fund")
        with pytest.raises(PipelineRejected) as exc:
            run_single(art, DOMAIN, StubTitleClassifier(), golden_gateway)
        assert exc.value.stage == "content"

    def test_summary_rejection(self):
        provider = ScriptedProvider([" Yes", " nope."])
        with pytest.raises(PipelineRejected) as exc:
            run_single(
                make_article(5, body="Body " * 60),
                DOMAIN,
                PermissiveClassifier(),
                Gateway(provider),
            )
        assert exc.value.stage == "summary"

    def test_aspect_rejection(self):
        provider = ScriptedProvider([" Yes", f" {VALID_SUMMARY}", "junk", "junk"])
        with pytest.raises(PipelineRejected) as exc:
            run_single(
                make_article(6, body="Body " * 60),
                DOMAIN,
                PermissiveClassifier(),
                Gateway(provider),
            )
        assert exc.value.stage == "aspect"


def run_golden(parallelism=1, progress=None):
    gateway = make_gateway()
    cards, report = run_pipeline(
        load_golden_articles(),
        DOMAIN,
        StubTitleClassifier(),
        gateway,
        parallelism=parallelism,
        now=lambda: FIXED_NOW,
        progress=progress,
    )
    return cards, report, gateway


class TestGoldenRun:
    def test_funnel_totals(self):
        _, report, _ = run_golden()
        assert report.retrieved == 12
        assert report.after_title_filter == 7
        assert report.after_content_filter == 4
        assert report.cards_emitted == 4
        assert report.undetermined == 0
        assert report.failures == ()

    def test_per_source_counters(self):
        _, report, _ = run_golden()
        rows = {c.source: c for c in report.per_source}
        assert set(rows) == {"technews.example", "gadgetwire.example", "futurebeat.example"}
        t = rows["technews.example"]
        assert (t.retrieved, t.after_title_filter, t.after_content_filter, t.cards_emitted) == (4, 3, 2, 2)
        for name in ("gadgetwire.example", "futurebeat.example"):
            r = rows[name]
            assert (r.retrieved, r.after_title_filter, r.after_content_filter, r.cards_emitted) == (4, 2, 1, 1)

    def test_per_source_sums_match_totals(self):
        _, report, _ = run_golden()
        for field in ("retrieved", "after_title_filter", "after_content_filter", "cards_emitted"):
            assert sum(getattr(r, field) for r in report.per_source) == getattr(
                report, field
            )

    def test_matches_frozen_golden_file(self):
        cards, _, _ = run_golden()
        frozen = (DATA_DIR / "golden_cards.ndjson").read_bytes()
        assert write_golden_cards(cards) == frozen

    def test_byte_identical_across_runs_and_parallelism(self):
        blobs = {write_golden_cards(run_golden(p)[0]) for p in (1, 4, 1, 4)}
        assert len(blobs) == 1

    def test_expected_aspects(self):
        cards, _, _ = run_golden()
        assert sorted(c.aspect.value for c in cards) == [
            "Health & Well-being",
            "Information & Discourse",
            "Security & Privacy",
            "Social Norms & Relationships",
        ]

    def test_cards_sorted_by_article_id(self):
        cards, _, _ = run_golden(parallelism=4)
        assert [c.article_id for c in cards] == sorted(c.article_id for c in cards)

    def test_request_accounting(self):
        _, _, gateway = run_golden()
        assert gateway.counters("content_filter").requests == 7
        assert gateway.counters("summary").requests == 4
        assert gateway.counters("aspect").requests == 4

    def test_progress_callback_counts_up(self):
        seen: list[int] = []
        run_golden(parallelism=4, progress=seen.append)
        assert seen == list(range(1, 13))

    def test_parallelism_validated(self):
        with pytest.raises(ValueError):
            run_golden(parallelism=0)


# Reference behavior fixture: a beauty-filter article whose summary and
# category are pinned expected outputs for the full single-article flow.
COLORISM_SUMMARY = (
    "It can lead to the reinforcement of colorism. Colorism is defined as"
    " prejudice against people with darker complexions, and it can have"
    " harmful effects on people's mental and physical health. Social media"
    " platforms like Instagram have filters that can lighten users' skin"
    " tone, which can perpetuate the idea that lighter skin is more"
    " desirable. In addition, recommendation algorithms on these platforms"
    " often favor content featuring people with lighter skin, which can"
    " reinforce users' biases and lead to the marginalization of people"
    " with darker complexions."
)


class TestWorkedExample:
    def test_beauty_filter_article_end_to_end(self):
        rules = (
            MockRule(match=("Answer Yes or No.", "beauty filters"), response=" Yes"),
            MockRule(
                match=("being discussed here is", "beauty filters"),
                response=" " + COLORISM_SUMMARY,
            ),
            MockRule(
                match=("Which aspect of life", "reinforcement of colorism"),
                response=" Equality & Justice",
            ),
        )
        gateway = Gateway(MockProvider(rules))
        body = (
            "Teenagers say the beauty filters bundled with every camera app"
            " quietly lighten skin and narrow noses, and that the edited"
            " faces they scroll past have started to feel like the norm. "
        ) * 4
        art = make_article(9, body=body)
        card = run_single(
            art, DOMAIN, PermissiveClassifier(), gateway, now=lambda: FIXED_NOW
        )
        assert card.summary == COLORISM_SUMMARY
        assert card.aspect == Aspect.EQUALITY_JUSTICE
