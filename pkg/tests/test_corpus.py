import pytest

from marro.corpus import (Corpus, CorpusError, Document, ROLES, RhetoricalRole, Sentence,
                          corpus_stats, derive_shifts, load_corpus, make_folds, shift_rate,
                          write_corpus, write_stats_csv)
from marro.tensor import Rng

from conftest import make_corpus, make_doc

R = RhetoricalRole


class TestRoles:
    def test_exactly_seven_with_stable_codes(self):
        assert [r.name for r in ROLES] == ["FAC", "RLC", "ARG", "RATIO", "STA", "PRE", "RPC"]
        assert [int(r) for r in ROLES] == list(range(7))

    def test_parse_case_insensitive(self):
        assert R.parse("rpc") is R.RPC
        assert R.parse("  Ratio ") is R.RATIO

    def test_parse_unknown(self):
        with pytest.raises(CorpusError, match="JUDGMENT"):
            R.parse("JUDGMENT")


class TestLoadCorpus:
    def test_single_line(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"doc_id":"d1","category":null,"sentences":'
                     '[{"text":"Appeal dismissed.","label":"RPC"}]}\n')
        c = load_corpus(p)
        assert len(c) == 1
        assert c.documents[0].sentences[0].label is R.RPC
        assert c.documents[0].sentences[0].index == 0

    def test_lowercase_label(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"doc_id":"d1","category":null,"sentences":[{"text":"x","label":"rpc"}]}\n')
        assert load_corpus(p).documents[0].sentences[0].label is R.RPC

    def test_unknown_label_names_doc(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"doc_id":"bad-doc","sentences":[{"text":"x","label":"JUDGMENT"}]}\n')
        with pytest.raises(CorpusError, match="bad-doc"):
            load_corpus(p)

    def test_malformed_line_reports_number(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"doc_id":"d1","sentences":[{"text":"x","label":null}]}\n{oops\n')
        with pytest.raises(CorpusError, match=":2"):
            load_corpus(p)

    def test_duplicate_doc_id(self, tmp_path):
        line = '{"doc_id":"d1","sentences":[{"text":"x","label":null}]}\n'
        p = tmp_path / "c.jsonl"
        p.write_text(line + line)
        with pytest.raises(CorpusError, match="duplicate"):
            load_corpus(p)

    def test_empty_document(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"doc_id":"d1","sentences":[]}\n')
        with pytest.raises(CorpusError, match="no sentences"):
            load_corpus(p)

    def test_round_trip(self, tiny_corpus_path, tmp_path):
        c = load_corpus(tiny_corpus_path)
        out = tmp_path / "again.jsonl"
        write_corpus(c, out)
        again = load_corpus(out, name=c.name)
        assert again == c

    def test_short_sentences_never_filtered(self, tiny_corpus_path):
        c = load_corpus(tiny_corpus_path)
        assert any(s.text == "dismissed" for d in c.documents for s in d.sentences)


class TestStats:
    def test_published_count_fixture(self):
        # role counts of the 30,729-sentence corpus the label scheme comes from
        counts = {R.FAC: 6342, R.ARG: 1638, R.RATIO: 17322, R.STA: 1319,
                  R.PRE: 3047, R.RPC: 546, R.RLC: 515}
        docs = [make_doc(f"doc-{role.name}", [role] * n) for role, n in counts.items()]
        rows = corpus_stats(Corpus(documents=docs))
        by_role = {name: (count, frac) for name, count, frac in rows}
        assert sum(c for c, _ in by_role.values()) == 30729
        assert by_role["FAC"][1] == pytest.approx(6342 / 30729, abs=1e-12)
        assert 0.2063 <= round(by_role["FAC"][1], 4) <= 0.2064
        assert round(by_role["RATIO"][1], 4) == pytest.approx(0.5637, abs=1e-4)
        assert round(by_role["RPC"][1], 4) == pytest.approx(0.0177, abs=1e-4)

    def test_second_corpus_ratio_fraction(self):
        docs = [make_doc("a", [R.RATIO] * 11231), make_doc("b", [R.FAC] * (18155 - 11231))]
        rows = corpus_stats(Corpus(documents=docs))
        frac = dict((n, f) for n, _, f in rows)["RATIO"]
        assert round(frac, 4) == 0.6186

    def test_fractions_sum_to_one(self):
        c = make_corpus([[R.FAC, R.ARG, R.RATIO], [R.RPC, R.RPC]])
        rows = corpus_stats(c)
        assert abs(sum(f for _, _, f in rows) - 1.0) < 1e-9

    def test_single_label_corpus(self):
        rows = corpus_stats(make_corpus([[R.STA, R.STA]]))
        fracs = {name: f for name, _, f in rows}
        assert fracs["STA"] == 1.0
        assert all(v == 0.0 for name, v in fracs.items() if name != "STA")

    def test_unlabeled_rejected(self):
        doc = Document(doc_id="d", sentences=[Sentence(0, "x", None)])
        with pytest.raises(CorpusError, match="unlabeled"):
            corpus_stats(Corpus(documents=[doc]))

    def test_csv_shape(self, tmp_path):
        rows = corpus_stats(make_corpus([[R.FAC, R.FAC, R.ARG]]))
        path = tmp_path / "stats.csv"
        write_stats_csv(rows, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "role,count,fraction"
        assert lines[1] == "FAC,2,0.6667"
        assert lines[-1] == "TOTAL,3,1.0000"


class TestShifts:
    def test_examples(self):
        assert derive_shifts(make_doc("d", [R.FAC, R.FAC, R.ARG])).shifts == [0, 1]
        assert derive_shifts(make_doc("d", [R.RATIO])).shifts == []
        assert derive_shifts(make_doc("d", [R.FAC, R.ARG, R.FAC, R.FAC])).shifts == [1, 1, 0]

    def test_unlabeled_rejected(self):
        doc = Document(doc_id="d", sentences=[Sentence(0, "x", R.FAC), Sentence(1, "y", None)])
        with pytest.raises(CorpusError):
            derive_shifts(doc)

    def test_definition_on_random_sequences(self):
        rng = Rng(101)
        for _ in range(200):
            n = 1 + rng.randint(12)
            labels = [ROLES[rng.randint(7)] for _ in range(n)]
            shifts = derive_shifts(make_doc("d", labels)).shifts
            assert len(shifts) == n - 1
            for i, s in enumerate(shifts):
                assert s in (0, 1)
                assert s == int(labels[i] != labels[i + 1])

    def test_shift_rate_examples(self):
        assert shift_rate(make_corpus([[R.FAC, R.FAC, R.FAC]])) == 1.0
        assert shift_rate(make_corpus([[R.FAC, R.ARG]])) == 0.0
        assert shift_rate(make_corpus([[R.FAC, R.FAC], [R.ARG, R.RATIO]])) == 0.5

    def test_shift_rate_needs_a_pair(self):
        with pytest.raises(CorpusError):
            shift_rate(make_corpus([[R.FAC], [R.ARG]]))


class TestFolds:
    def _corpus(self, n):
        return make_corpus([[R.FAC, R.ARG] for _ in range(n)])

    def test_even_split(self):
        split = make_folds(self._corpus(10), k=5, seed=0)
        sizes = sorted(len(split.fold_doc_ids(f)) for f in range(5))
        assert sizes == [2, 2, 2, 2, 2]

    def test_uneven_split(self):
        split = make_folds(self._corpus(7), k=5, seed=0)
        sizes = sorted(len(split.fold_doc_ids(f)) for f in range(5))
        assert sizes == [1, 1, 1, 2, 2]

    def test_deterministic(self):
        c = self._corpus(9)
        assert make_folds(c, 3, 17).assignment == make_folds(c, 3, 17).assignment

    def test_partition(self):
        c = self._corpus(11)
        split = make_folds(c, 4, seed=3)
        all_ids = [d for f in range(4) for d in split.fold_doc_ids(f)]
        assert sorted(all_ids) == sorted(d.doc_id for d in c.documents)
        assert len(all_ids) == len(set(all_ids))

    def test_independent_of_document_order(self):
        docs = [make_doc(f"d{i}", [R.FAC]) for i in range(8)]
        c1 = Corpus(documents=list(docs))
        c2 = Corpus(documents=list(reversed(docs)))
        assert make_folds(c1, 4, 5).assignment == make_folds(c2, 4, 5).assignment

    def test_bad_k(self):
        with pytest.raises(CorpusError):
            make_folds(self._corpus(3), k=1, seed=0)
        with pytest.raises(CorpusError):
            make_folds(self._corpus(3), k=4, seed=0)
