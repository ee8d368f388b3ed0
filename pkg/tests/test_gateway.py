"""Gateway behavior (retries, pacing, budgets, accounting), the mock
provider, hashed embeddings, and the trainable title baseline."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conseq.errors import BudgetExceeded, DegenerateDataset, ProviderUnavailable
from conseq.evalkit import compute_metrics, split_train_test
from conseq.gateway.baseline import (
    load_model,
    predict_title,
    save_model,
    train_title_baseline,
)
from conseq.gateway.core import (
    BACKOFF_BASE_S,
    BACKOFF_FACTOR,
    MAX_ATTEMPTS,
    CompletionRequest,
    CompletionResponse,
    Gateway,
    estimate_tokens,
)
from conseq.gateway.mock import EMBED_DIM, MockProvider, MockRule, hashed_embedding, load_rules

from conftest import FakeClock, build_separable_corpus, load_mock_rules


def make_gateway(provider=None, **kwargs) -> tuple[Gateway, FakeClock]:
    clock = FakeClock()
    gw = Gateway(
        provider or MockProvider(), clock=clock, sleep=clock.sleep, **kwargs
    )
    return gw, clock


def simple_request(prompt="one two three", **kw) -> CompletionRequest:
    kw.setdefault("max_tokens", 5)
    return CompletionRequest(prompt=prompt, **kw)


class TestCompletionRequest:
    def test_empty_prompt_rejected(self):
        with pytest.raises(ValueError):
            CompletionRequest(prompt="", max_tokens=1)

    def test_nonpositive_max_tokens_rejected(self):
        with pytest.raises(ValueError):
            CompletionRequest(prompt="x", max_tokens=0)

    def test_temperature_range(self):
        with pytest.raises(ValueError):
            CompletionRequest(prompt="x", max_tokens=1, temperature=2.5)

    def test_negative_token_counts_rejected(self):
        with pytest.raises(ValueError):
            CompletionResponse(
                text="", prompt_tokens=-1, completion_tokens=0,
                provider="p", model="m", latency_ms=0.0,
            )


class TestRetries:
    def test_two_failures_then_success_with_backoff_1s_2s(self):
        provider = MockProvider(fail_times=2, default_response="ok")
        gw, clock = make_gateway(provider)
        resp = gw.complete(simple_request(tag="t"))
        assert resp.text == "ok"
        assert clock.sleeps == [BACKOFF_BASE_S, BACKOFF_BASE_S * BACKOFF_FACTOR]
        assert clock.sleeps == [1.0, 2.0]
        assert gw.counters("t").attempts == MAX_ATTEMPTS
        assert gw.counters("t").requests == 1

    def test_three_failures_exhaust_attempts(self):
        provider = MockProvider(fail_times=3)
        gw, clock = make_gateway(provider)
        with pytest.raises(ProviderUnavailable):
            gw.complete(simple_request(tag="t"))
        # two backoff sleeps happened, no third sleep after the final failure
        assert clock.sleeps == [1.0, 2.0]
        assert gw.counters("t").requests == 0

    def test_embed_retries_too(self):
        provider = MockProvider(fail_times=1)
        gw, clock = make_gateway(provider)
        vec = gw.embed("solar power")
        assert clock.sleeps == [1.0]
        assert vec.shape == (EMBED_DIM,)


class TestRateBudget:
    def test_third_call_in_window_waits(self):
        gw, clock = make_gateway(rpm=2)
        gw.complete(simple_request())
        clock.advance(5.0)
        gw.complete(simple_request())
        assert clock.sleeps == []
        gw.complete(simple_request())
        # first slot was taken at t=1000; window frees at t=1060; by the
        # third call the clock stood at 1005, so the wait is 55s.
        assert clock.sleeps == [pytest.approx(55.0)]

    def test_old_requests_fall_out_of_window(self):
        gw, clock = make_gateway(rpm=1)
        gw.complete(simple_request())
        clock.advance(61.0)
        gw.complete(simple_request())
        assert clock.sleeps == []

    def test_rpm_must_be_positive(self):
        with pytest.raises(ValueError):
            Gateway(MockProvider(), rpm=0)


class TestTokenBudget:
    def test_request_over_cap_raises_before_any_call(self):
        calls = []

        class CountingProvider(MockProvider):
            def complete_once(self, request):
                calls.append(request)
                return super().complete_once(request)

        gw, _ = make_gateway(CountingProvider(), token_cap=10)
        # 8 prompt words + 3 max_tokens = 11 estimated > 10
        with pytest.raises(BudgetExceeded):
            gw.complete(
                CompletionRequest(prompt="a b c d e f g h", max_tokens=3)
            )
        assert calls == []

    def test_under_cap_succeeds_then_spend_accumulates(self):
        gw, _ = make_gateway(MockProvider(default_response="x y"), token_cap=20)
        gw.complete(CompletionRequest(prompt="a b c", max_tokens=2))  # spends 3 + 2
        with pytest.raises(BudgetExceeded):
            # 5 already spent; 14 words + 2 > remaining 15
            gw.complete(
                CompletionRequest(
                    prompt="w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 w12 w13 w14",
                    max_tokens=2,
                )
            )

    def test_estimate_is_whitespace_tokens(self):
        assert estimate_tokens("a b  c\nd") == 4


class TestAccounting:
    def test_per_tag_counters_sum_to_total(self):
        gw, _ = make_gateway(MockProvider(default_response="out put text"))
        gw.complete(simple_request(prompt="p1 p2", tag="alpha"))
        gw.complete(simple_request(prompt="q1 q2 q3", tag="alpha"))
        gw.complete(simple_request(prompt="r1", tag="beta"))
        gw.embed("hello world", tag="gamma")
        a, b, g = gw.counters("alpha"), gw.counters("beta"), gw.counters("gamma")
        assert a.requests == 2 and b.requests == 1 and g.requests == 1
        assert a.prompt_tokens == 5
        assert a.completion_tokens == 6
        assert b.prompt_tokens == 1
        assert g.prompt_tokens == 2 and g.completion_tokens == 0
        assert gw.total_tokens() == sum(
            c.total_tokens for c in (a, b, g)
        )
        assert gw.total_tokens() == (5 + 6) + (1 + 3) + 2


class TestMockProvider:
    def test_rule_table_example_marker_plus_topic(self):
        gw, _ = make_gateway(MockProvider(load_mock_rules()))
        resp = gw.complete(
            simple_request(
                prompt="patients report simulator sickness after an hour. Answer Yes or No."
            )
        )
        assert resp.text == "Yes"

    def test_all_markers_must_match(self):
        rules = (MockRule(match=("alpha", "beta"), response="both"),)
        provider = MockProvider(rules, default_response="fallback")
        gw, _ = make_gateway(provider)
        assert gw.complete(simple_request(prompt="alpha only")).text == "fallback"
        assert gw.complete(simple_request(prompt="alpha and beta here")).text == "both"

    def test_first_matching_rule_wins(self):
        rules = (
            MockRule(match=("needle",), response="first"),
            MockRule(match=("needle",), response="second"),
        )
        gw, _ = make_gateway(MockProvider(rules))
        assert gw.complete(simple_request(prompt="a needle here")).text == "first"

    def test_pure_function_of_inputs(self):
        rules = load_mock_rules()
        p1, p2 = MockProvider(rules), MockProvider(rules)
        req = simple_request(prompt="the sleepless-scroll effect. Answer Yes or No.")
        assert p1.complete_once(req).text == p2.complete_once(req).text == " Yes"

    def test_stop_strings_truncate(self):
        provider = MockProvider(default_response="keep this STOP drop this")
        gw, _ = make_gateway(provider)
        resp = gw.complete(simple_request(stop=("STOP",)))
        assert resp.text == "keep this "

    def test_load_rules_round_trip(self):
        text = '[{"match": ["a"], "response": "r"}]'
        rules = load_rules(text)
        assert rules == (MockRule(match=("a",), response="r"),)

    def test_empty_match_list_rejected(self):
        with pytest.raises(ValueError):
            MockRule(match=(), response="r")


class TestEmbeddings:
    def test_deterministic(self):
        assert np.array_equal(hashed_embedding("abc", 7), hashed_embedding("abc", 7))

    def test_unit_norm(self):
        for text in ("abc", "solar power", "a much longer sentence with many words"):
            assert np.linalg.norm(hashed_embedding(text, 7)) == pytest.approx(1.0, abs=1e-6)

    def test_seed_changes_vector(self):
        assert not np.array_equal(hashed_embedding("abc", 7), hashed_embedding("abc", 8))

    def test_topically_close_pairs_score_higher(self):
        solar_a = hashed_embedding("solar power", 7)
        solar_b = hashed_embedding("solar energy", 7)
        privacy = hashed_embedding("privacy leak", 7)
        assert float(solar_a @ solar_b) > float(solar_a @ privacy)

    def test_gateway_validates_unit_norm(self):
        class BrokenProvider(MockProvider):
            def embed_once(self, text):
                return np.ones(EMBED_DIM)

        gw, _ = make_gateway(BrokenProvider())
        with pytest.raises(ProviderUnavailable):
            gw.embed("anything")

    def test_no_word_tokens_rejected(self):
        with pytest.raises(ValueError):
            hashed_embedding("!!!", 7)

    @given(st.text(alphabet=st.characters(min_codepoint=97, max_codepoint=122), min_size=1, max_size=30))
    @settings(max_examples=50)
    def test_norm_property(self, text):
        vec = hashed_embedding(text, 7)
        assert vec.shape == (EMBED_DIM,)
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-6)


TOY_SET = [("harms of X", True)] * 5 + [("launch of Y", False)] * 5


class TestBaseline:
    def test_toy_set_classified_perfectly(self):
        model = train_title_baseline(TOY_SET, seed=0)
        for title, label in TOY_SET:
            assert (model.predict(title) >= 0.5) == label

    def test_training_is_deterministic(self):
        m1 = train_title_baseline(TOY_SET, seed=0)
        m2 = train_title_baseline(TOY_SET, seed=0)
        assert np.array_equal(m1.weights, m2.weights)
        assert m1.vocabulary == m2.vocabulary
        assert m1.trained_on == m2.trained_on

    def test_loss_non_increasing_on_toy_set(self):
        model = train_title_baseline(TOY_SET, seed=0)
        assert len(model.loss_history) == 50
        for earlier, later in zip(model.loss_history, model.loss_history[1:]):
            assert later <= earlier + 1e-12

    def test_all_one_class_raises(self):
        with pytest.raises(DegenerateDataset):
            train_title_baseline([("a harm", True)] * 6, seed=0)
        with pytest.raises(DegenerateDataset):
            train_title_baseline([("a launch", False)] * 6, seed=0)

    def test_one_example_of_a_class_raises(self):
        with pytest.raises(DegenerateDataset):
            train_title_baseline([("harm", True)] + [("fine", False)] * 5, seed=0)

    def test_unknown_tokens_score_sigmoid_of_bias(self):
        import math

        model = train_title_baseline(TOY_SET, seed=0)
        bias = float(model.weights[-1])
        expected = 1.0 / (1.0 + math.exp(-bias))
        assert predict_title(model, "zzz qqq www") == pytest.approx(expected, abs=1e-12)

    def test_scores_strictly_inside_unit_interval(self):
        model = train_title_baseline(TOY_SET, seed=0)
        for title in ("harms of X", "launch of Y", "unrelated words entirely"):
            assert 0.0 < model.predict(title) < 1.0

    def test_save_load_round_trip(self, tmp_path):
        model = train_title_baseline(TOY_SET, seed=0)
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)
        assert np.array_equal(loaded.weights, model.weights)
        assert loaded.vocabulary == model.vocabulary
        for title in ("harms of X", "some new words"):
            assert loaded.predict(title) == model.predict(title)

    def test_separable_corpus_f1_at_least_95(self):
        corpus = build_separable_corpus(100, seed=42)
        train, test = split_train_test(corpus, ratio=0.8, seed=42)
        assert len(train) == 160 and len(test) == 40
        model = train_title_baseline(train, seed=42)
        preds = [
            "relevant" if model.predict(t) >= 0.5 else "irrelevant" for t, _ in test
        ]
        labels = ["relevant" if y else "irrelevant" for _, y in test]
        report = compute_metrics(preds, labels)
        assert report.f1 >= 0.95
