import pytest

from marro.annotation import (AnnotationError, AnnotationSet, corpus_agreement,
                              load_annotations, majority_gold, pair_agreement)
from marro.corpus import ROLES, RhetoricalRole
from marro.tensor import Rng

R = RhetoricalRole


def random_seq(rng: Rng, n: int) -> list[RhetoricalRole]:
    return [ROLES[rng.randint(7)] for _ in range(n)]


class TestPairAgreement:
    def test_two_of_three_match(self):
        p, r, f = pair_agreement([R.FAC, R.FAC, R.ARG], [R.FAC, R.ARG, R.ARG])
        assert (p, r, f) == (2 / 3, 2 / 3, 2 / 3)

    def test_identical(self):
        assert pair_agreement([R.STA, R.PRE], [R.STA, R.PRE]) == (1.0, 1.0, 1.0)

    def test_fully_disjoint_zero_convention(self):
        assert pair_agreement([R.FAC, R.FAC], [R.ARG, R.RPC]) == (0.0, 0.0, 0.0)

    def test_length_mismatch(self):
        with pytest.raises(AnnotationError):
            pair_agreement([R.FAC], [R.FAC, R.ARG])

    def test_empty(self):
        with pytest.raises(AnnotationError):
            pair_agreement([], [])

    def test_precision_equals_recall_equals_f(self):
        rng = Rng(7)
        for _ in range(100):
            n = 1 + rng.randint(20)
            a, b = random_seq(rng, n), random_seq(rng, n)
            p, r, f = pair_agreement(a, b)
            assert p == r == f

    def test_symmetry_precision_recall_swap(self):
        rng = Rng(8)
        for _ in range(100):
            n = 1 + rng.randint(20)
            a, b = random_seq(rng, n), random_seq(rng, n)
            p_ab, r_ab, _ = pair_agreement(a, b)
            p_ba, r_ba, _ = pair_agreement(b, a)
            assert p_ab == r_ba and r_ab == p_ba


class TestCorpusAgreement:
    def _set(self, doc_id, a1, a2, a3):
        return AnnotationSet(doc_id=doc_id, annotations={"A1": a1, "A2": a2, "A3": a3})

    def test_all_identical(self):
        seq = [R.FAC, R.RATIO, R.RPC]
        report = corpus_agreement([self._set("d1", seq, seq, seq),
                                   self._set("d2", seq, seq, seq)])
        for metrics in report.per_pair.values():
            assert metrics == (1.0, 1.0, 1.0)
        assert report.overall_f == 1.0

    def test_unweighted_mean_over_documents(self):
        # doc1: A1/A2 agree fully; doc2: they agree on half
        d1 = self._set("d1", [R.FAC, R.FAC], [R.FAC, R.FAC], [R.FAC, R.FAC])
        d2 = self._set("d2", [R.FAC, R.FAC], [R.FAC, R.ARG], [R.FAC, R.FAC])
        report = corpus_agreement([d1, d2])
        assert report.per_pair[("A1", "A2")][2] == pytest.approx(0.75)

    def test_missing_annotator(self):
        broken = AnnotationSet(doc_id="d", annotations={"A1": [R.FAC], "A2": [R.FAC]})
        with pytest.raises(AnnotationError, match="A3"):
            corpus_agreement([broken])

    def test_overall_is_mean_of_pair_f(self):
        rng = Rng(11)
        sets = []
        for i in range(4):
            n = 2 + rng.randint(6)
            sets.append(self._set(f"d{i}", random_seq(rng, n), random_seq(rng, n),
                                  random_seq(rng, n)))
        report = corpus_agreement(sets)
        mean_f = sum(f for _, _, f in report.per_pair.values()) / 3
        assert report.overall_f == pytest.approx(mean_f)

    def test_json_fixture(self, tiny_annotations_path):
        sets = load_annotations(tiny_annotations_path)
        assert {s.doc_id for s in sets} == {"caseA", "caseB"}
        report = corpus_agreement(sets)
        assert 0.0 <= report.overall_f <= 1.0


class TestMajorityGold:
    def _set(self, a1, a2, a3):
        return AnnotationSet(doc_id="d", annotations={"A1": a1, "A2": a2, "A3": a3})

    def test_two_of_three(self):
        gold, flagged = majority_gold(self._set([R.FAC], [R.FAC], [R.ARG]))
        assert gold == [R.FAC] and flagged == []

    def test_three_way_tie_flags_first(self):
        gold, flagged = majority_gold(self._set([R.FAC], [R.ARG], [R.RATIO]))
        assert gold == [R.FAC] and flagged == [0]

    def test_unanimous(self):
        seq = [R.STA, R.PRE, R.RPC]
        gold, flagged = majority_gold(self._set(list(seq), list(seq), list(seq)))
        assert gold == seq and flagged == []

    def test_unflagged_positions_invariant_under_reordering(self):
        rng = Rng(13)
        for _ in range(50):
            n = 1 + rng.randint(10)
            a1, a2, a3 = (random_seq(rng, n) for _ in range(3))
            gold, flagged = majority_gold(self._set(a1, a2, a3))
            gold2, flagged2 = majority_gold(
                AnnotationSet(doc_id="d", annotations={"A1": a2, "A2": a3, "A3": a1}))
            assert flagged == flagged2
            for pos in range(n):
                if pos not in flagged:
                    assert gold[pos] == gold2[pos]

    def test_length_mismatch(self):
        bad = {"A1": [R.FAC], "A2": [R.FAC, R.ARG], "A3": [R.FAC]}
        with pytest.raises(AnnotationError):
            AnnotationSet(doc_id="d", annotations=bad)
