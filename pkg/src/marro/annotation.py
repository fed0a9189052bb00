"""Pairwise inter-annotator agreement and majority-vote gold curation.

Agreement between two annotators over one document is measured position-wise:
the intersection of key and response annotations is the set of sentence
positions that received the same label from both. With exactly one label per
sentence the key and response sets have equal size n, so precision, recall,
and F collapse to the plain agreement rate per document.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .corpus import CorpusError, RhetoricalRole

DEFAULT_ANNOTATORS = ("A1", "A2", "A3")


class AnnotationError(ValueError):
    pass


@dataclass
class AnnotationSet:
    doc_id: str
    annotations: dict[str, list[RhetoricalRole]]

    def __post_init__(self):
        lengths = {len(seq) for seq in self.annotations.values()}
        if len(lengths) > 1:
            raise AnnotationError(
                f"document {self.doc_id!r}: annotators disagree on sentence count {sorted(lengths)}")


@dataclass
class AgreementReport:
    per_pair: dict[tuple[str, str], tuple[float, float, float]]
    overall_f: float

    def to_json(self) -> str:
        obj = {
            "pairs": [
                {"key": a, "response": b,
                 "precision": p, "recall": r, "f_score": f}
                for (a, b), (p, r, f) in sorted(self.per_pair.items())
            ],
            "overall_f": self.overall_f,
        }
        return json.dumps(obj, indent=2)


def pair_agreement(key: list[RhetoricalRole], response: list[RhetoricalRole]) -> tuple[float, float, float]:
    """(precision, recall, f_score) of one annotator pair on one document.

    Precision divides by the response count, recall by the key count; the
    position-wise intersection makes both denominators the sequence length.
    A 0/0 F-score is defined as 0.
    """
    if len(key) != len(response):
        raise AnnotationError(f"length mismatch: key {len(key)} vs response {len(response)}")
    if not key:
        raise AnnotationError("empty annotation sequences")
    match = sum(1 for a, b in zip(key, response) if a == b)
    precision = match / len(response)
    recall = match / len(key)
    if precision == recall:  # harmonic mean of equals, kept exact
        f = precision
    elif precision + recall == 0:
        f = 0.0
    else:
        f = 2 * precision * recall / (precision + recall)
    return precision, recall, f


def corpus_agreement(sets: list[AnnotationSet],
                     annotators: tuple[str, ...] = DEFAULT_ANNOTATORS) -> AgreementReport:
    """Document-level pair metrics averaged (unweighted) over all documents.

    overall_f is the mean of the pairwise mean F scores.
    """
    if not sets:
        raise AnnotationError("no annotation sets")
    pairs = list(itertools.combinations(annotators, 2))
    sums: dict[tuple[str, str], list[float]] = {pair: [0.0, 0.0, 0.0] for pair in pairs}
    for aset in sets:
        for name in annotators:
            if name not in aset.annotations:
                raise AnnotationError(f"document {aset.doc_id!r}: missing annotator {name!r}")
        for ai, aj in pairs:
            p, r, f = pair_agreement(aset.annotations[ai], aset.annotations[aj])
            acc = sums[(ai, aj)]
            acc[0] += p
            acc[1] += r
            acc[2] += f
    n = len(sets)
    per_pair = {pair: (acc[0] / n, acc[1] / n, acc[2] / n) for pair, acc in sums.items()}
    overall = sum(f for _, _, f in per_pair.values()) / len(per_pair)
    return AgreementReport(per_pair=per_pair, overall_f=overall)


def majority_gold(aset: AnnotationSet,
                  annotators: tuple[str, ...] = DEFAULT_ANNOTATORS
                  ) -> tuple[list[RhetoricalRole], list[int]]:
    """Per-position majority label over exactly three annotators.

    Where all three disagree the first annotator's label is emitted and the
    position is flagged for adjudication.
    """
    if len(annotators) != 3:
        raise AnnotationError(f"majority curation needs exactly 3 annotators, got {len(annotators)}")
    seqs = []
    for name in annotators:
        if name not in aset.annotations:
            raise AnnotationError(f"document {aset.doc_id!r}: missing annotator {name!r}")
        seqs.append(aset.annotations[name])
    if len({len(s) for s in seqs}) != 1:
        raise AnnotationError(f"document {aset.doc_id!r}: annotation length mismatch")
    gold: list[RhetoricalRole] = []
    flagged: list[int] = []
    for pos, labels in enumerate(zip(*seqs)):
        counts: dict[RhetoricalRole, int] = {}
        for lab in labels:
            counts[lab] = counts.get(lab, 0) + 1
        best = max(counts.items(), key=lambda item: item[1])
        if best[1] >= 2:
            gold.append(best[0])
        else:
            gold.append(labels[0])
            flagged.append(pos)
    return gold, flagged


# ---------------------------------------------------------------------------
# JSON-Lines annotation IO

def load_annotations(path) -> list[AnnotationSet]:
    """One object per line: {"doc_id": ..., "annotations": {"A1": [...], ...}}."""
    sets = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AnnotationError(f"line {lineno}: malformed JSON: {exc}") from None
            doc_id = obj.get("doc_id")
            raw = obj.get("annotations")
            if not isinstance(doc_id, str) or not isinstance(raw, dict):
                raise AnnotationError(f"line {lineno}: expected doc_id and annotations map")
            try:
                annotations = {name: [RhetoricalRole.parse(lab) for lab in seq]
                               for name, seq in raw.items()}
            except CorpusError as exc:
                raise AnnotationError(f"document {doc_id!r}: {exc}") from None
            sets.append(AnnotationSet(doc_id=doc_id, annotations=annotations))
    return sets
