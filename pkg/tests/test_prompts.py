import json

import pytest

from marro.corpus import ROLES, RhetoricalRole, load_corpus
from marro.prompts import (AmbiguousCompletion, CompletionParams, Exemplar, MockClient,
                           PromptError, UnparseableCompletion, build_few_shot,
                           build_zero_shot, default_deck, parse_label, run_llm_eval,
                           select_exemplars)

from conftest import GOLDENS

R = RhetoricalRole


def golden_exemplars() -> list[Exemplar]:
    with open(GOLDENS / "exemplars.json", encoding="utf-8") as fh:
        return [Exemplar(span=e["span"], role=R[e["role"]]) for e in json.load(fh)]


class TestZeroShot:
    def test_matches_golden_bytes(self):
        built = build_zero_shot(default_deck(), "Appeal dismissed.")
        assert built.encode("utf-8") == (GOLDENS / "zero_shot.txt").read_bytes()

    def test_missing_role_rejected(self):
        deck = [c for c in default_deck() if c.role is not R.RPC]
        with pytest.raises(PromptError, match="RPC"):
            build_zero_shot(deck, "x")

    def test_empty_input_allowed(self):
        prompt = build_zero_shot(default_deck(), "")
        assert "Input segment: ⟨⟩" in prompt

    def test_lf_newlines_only(self):
        assert "\r" not in build_zero_shot(default_deck(), "line")


class TestFewShot:
    def test_matches_golden_bytes(self):
        built = build_few_shot(default_deck(), golden_exemplars(), "Appeal dismissed.")
        assert built.encode("utf-8") == (GOLDENS / "few_shot.txt").read_bytes()

    def test_contains_fig_exemplar_line(self):
        prompt = build_few_shot(default_deck(), golden_exemplars(), "x")
        assert ('1. The text "The appellant Kashmira Singh has been convicted of the murder '
                'of one Ramesh, a small boy aged five, and has been sentenced to death." '
                'is of type "Facts (FAC)".') in prompt

    def test_duplicate_exemplar_rejected(self):
        exemplars = golden_exemplars()
        exemplars.append(Exemplar(span="another facts sentence", role=R.FAC))
        with pytest.raises(PromptError, match="duplicate"):
            build_few_shot(default_deck(), exemplars, "x")

    def test_missing_exemplar_rejected(self):
        exemplars = [e for e in golden_exemplars() if e.role is not R.STA]
        with pytest.raises(PromptError, match="STA"):
            build_few_shot(default_deck(), exemplars, "x")

    def test_exemplar_lines_follow_role_code_order(self):
        prompt = build_few_shot(default_deck(), golden_exemplars(), "x")
        section = prompt.split("Following is a list of example text for each label:")[1]
        positions = [section.find(f'"{name}"') for name in
                     ("Facts (FAC)", "Ruling by Lower Court (RLC)", "Argument (ARG)",
                      "Ratio of the decision (RATIO)", "Statute (STA)", "Precedent (PRE)",
                      "Ruling by the Present Court (RPC)")]
        assert positions == sorted(positions) and all(p >= 0 for p in positions)

    def test_empty_span_rejected(self):
        with pytest.raises(PromptError):
            Exemplar(span="", role=R.FAC)


class TestParseLabel:
    def test_display_name(self):
        assert parse_label("Facts (FAC)") is R.FAC

    def test_bare_abbreviation_sentence(self):
        assert parse_label("The label is RATIO.") is R.RATIO

    def test_ambiguous(self):
        with pytest.raises(AmbiguousCompletion):
            parse_label("Could be FAC or ARG")

    def test_unparseable(self):
        with pytest.raises(UnparseableCompletion):
            parse_label("no idea")

    def test_case_insensitive(self):
        assert parse_label("ruling by lower court") is R.RLC
        assert parse_label("statute") is R.STA

    def test_display_name_outranks_other_abbreviations(self):
        # the RPC display name contains the word "Present", not the role PRE
        assert parse_label('The segment is "Ruling by the Present Court (RPC)"') is R.RPC

    def test_substring_inside_word_does_not_match(self):
        with pytest.raises(UnparseableCompletion):
            parse_label("prefactory remarks")  # neither PRE nor FAC

    def test_total_over_display_names(self):
        for card in default_deck():
            assert parse_label(card.display_name) is card.role


class TestRunLlmEval:
    def test_echoing_gold_labels_is_perfect(self, tiny_corpus_path):
        corpus = load_corpus(tiny_corpus_path)
        gold_by_prompt = {}
        deck = default_deck()
        from marro.prompts import DISPLAY_NAMES
        for doc in corpus.documents:
            for s in doc.sentences:
                gold_by_prompt[build_zero_shot(deck, s.text)] = DISPLAY_NAMES[s.label]
        client = MockClient(gold_by_prompt)
        result = run_llm_eval(client, corpus, mode="zero")
        assert result.report.macro_f1 == 1.0
        assert result.unparseable == 0

    def test_unknown_completions_score_zero(self, tiny_corpus_path):
        corpus = load_corpus(tiny_corpus_path)
        client = MockClient({"default": "unknown"})
        result = run_llm_eval(client, corpus, mode="zero")
        assert result.report.macro_f1 == 0.0
        assert result.unparseable == result.total == corpus.total_sentences()

    def test_few_shot_exemplar_selection_reproducible(self, tiny_corpus_path):
        corpus = load_corpus(tiny_corpus_path)
        a = select_exemplars(corpus, seed=7)
        b = select_exemplars(corpus, seed=7)
        assert [(e.span, e.role) for e in a] == [(e.span, e.role) for e in b]
        roles = [e.role for e in a]
        assert roles == list(ROLES)

    def test_few_shot_eval_with_callable_mock(self, tiny_corpus_path):
        corpus = load_corpus(tiny_corpus_path)
        client = MockClient(lambda prompt: "Statute (STA)")
        result = run_llm_eval(client, corpus, mode="few", exemplar_seed=3)
        assert result.unparseable == 0
        # every prediction is STA, so STA recall is 1 and others 0
        assert result.report.per_label["STA"][1] == 1.0

    def test_client_failure_names_sentence(self, tiny_corpus_path):
        corpus = load_corpus(tiny_corpus_path)

        def boom(prompt):
            raise RuntimeError("connection reset")

        with pytest.raises(PromptError, match="caseA"):
            run_llm_eval(MockClient(boom), corpus, mode="zero")

    def test_default_params(self):
        params = CompletionParams()
        assert (params.temperature, params.top_k, params.top_p) == (0.0, 1, 0.1)
