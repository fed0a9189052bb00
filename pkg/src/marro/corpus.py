"""Labeled legal-document corpora: data model, JSON-Lines IO, statistics,
label-shift sequences, and cross-validation fold assignment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable

from .tensor import Rng


class CorpusError(ValueError):
    """Raised for malformed corpus files or invalid corpus operations."""


class RhetoricalRole(IntEnum):
    """The seven sentence roles, with stable integer codes 0..6."""

    FAC = 0    # facts of the case
    RLC = 1    # ruling by a lower court
    ARG = 2    # arguments of the contending parties
    RATIO = 3  # rationale / application of law
    STA = 4    # statute
    PRE = 5    # precedent
    RPC = 6    # ruling by the present court

    @classmethod
    def parse(cls, text: str) -> "RhetoricalRole":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise CorpusError(f"unknown rhetorical role label: {text!r}") from None


ROLES: tuple[RhetoricalRole, ...] = tuple(RhetoricalRole)
NUM_ROLES = len(ROLES)


@dataclass
class Sentence:
    index: int
    text: str
    label: RhetoricalRole | None = None


@dataclass
class Document:
    doc_id: str
    sentences: list[Sentence]
    category: str | None = None

    def __post_init__(self):
        if not self.sentences:
            raise CorpusError(f"document {self.doc_id!r} has no sentences")

    def __len__(self) -> int:
        return len(self.sentences)

    def labels(self) -> list[RhetoricalRole]:
        out = []
        for s in self.sentences:
            if s.label is None:
                raise CorpusError(f"unlabeled sentence {s.index} in document {self.doc_id!r}")
            out.append(s.label)
        return out


@dataclass
class Corpus:
    documents: list[Document]
    name: str = ""

    def __post_init__(self):
        seen = set()
        for d in self.documents:
            if d.doc_id in seen:
                raise CorpusError(f"duplicate doc_id {d.doc_id!r}")
            seen.add(d.doc_id)

    def __len__(self) -> int:
        return len(self.documents)

    def total_sentences(self) -> int:
        return sum(len(d) for d in self.documents)

    def by_id(self, doc_id: str) -> Document:
        for d in self.documents:
            if d.doc_id == doc_id:
                return d
        raise KeyError(doc_id)


@dataclass
class ShiftSequence:
    """Binary sequence over adjacent sentence pairs: 1 where the label changes."""

    doc_id: str
    shifts: list[int]


@dataclass
class FoldSplit:
    k: int
    assignment: dict[str, int]
    seed: int

    def fold_doc_ids(self, fold: int) -> list[str]:
        return [d for d, f in self.assignment.items() if f == fold]


# ---------------------------------------------------------------------------
# JSON-Lines corpus IO

def load_corpus(path, name: str | None = None) -> Corpus:
    """Load a JSON-Lines corpus: one document object per line.

    Raises CorpusError naming the line number for malformed JSON, and the
    offending doc_id for unknown labels, duplicates, or empty documents.
    """
    path = Path(path)
    documents: list[Document] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path.name}:{lineno}: malformed JSON line: {exc}") from None
            doc_id = obj.get("doc_id")
            if not isinstance(doc_id, str) or not doc_id:
                raise CorpusError(f"{path.name}:{lineno}: missing or invalid doc_id")
            sentences = []
            for i, s in enumerate(obj.get("sentences", [])):
                raw = s.get("label")
                try:
                    label = None if raw is None else RhetoricalRole.parse(raw)
                except CorpusError as exc:
                    raise CorpusError(f"document {doc_id!r}: {exc}") from None
                sentences.append(Sentence(index=i, text=s.get("text", ""), label=label))
            if not sentences:
                raise CorpusError(f"{path.name}:{lineno}: document {doc_id!r} has no sentences")
            documents.append(Document(doc_id=doc_id, sentences=sentences,
                                      category=obj.get("category")))
    return Corpus(documents=documents, name=name if name is not None else path.stem)


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in corpus.documents:
            obj = {
                "doc_id": d.doc_id,
                "category": d.category,
                "sentences": [
                    {"text": s.text, "label": None if s.label is None else s.label.name}
                    for s in d.sentences
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# statistics

def corpus_stats(corpus: Corpus) -> list[tuple[str, int, float]]:
    """Per-role (name, count, fraction) rows in role-code order.

    All sentences must be labeled; fractions sum to 1 within 1e-9.
    """
    counts = {role: 0 for role in ROLES}
    total = 0
    for d in corpus.documents:
        for label in d.labels():
            counts[label] += 1
            total += 1
    if total == 0:
        raise CorpusError("corpus has no sentences")
    return [(role.name, counts[role], counts[role] / total) for role in ROLES]


def write_stats_csv(rows: list[tuple[str, int, float]], path) -> None:
    """CSV with header role,count,fraction and a final TOTAL row; 4-decimal fractions."""
    total = sum(count for _, count, _ in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("role,count,fraction\n")
        for role, count, fraction in rows:
            fh.write(f"{role},{count},{fraction:.4f}\n")
        fh.write(f"TOTAL,{total},{1.0:.4f}\n")


# ---------------------------------------------------------------------------
# label shifts

def derive_shifts(doc: Document) -> ShiftSequence:
    """shifts[i] = 1 iff label(i) != label(i+1); length n-1, empty for n=1."""
    labels = doc.labels()
    shifts = [int(labels[i] != labels[i + 1]) for i in range(len(labels) - 1)]
    return ShiftSequence(doc_id=doc.doc_id, shifts=shifts)


def shift_rate(corpus: Corpus) -> float:
    """Fraction of adjacent same-document sentence pairs whose labels agree."""
    same = 0
    pairs = 0
    for d in corpus.documents:
        s = derive_shifts(d).shifts
        pairs += len(s)
        same += len(s) - sum(s)
    if pairs == 0:
        raise CorpusError("no document with at least two sentences")
    return same / pairs


# ---------------------------------------------------------------------------
# cross-validation folds

def make_folds(corpus: Corpus, k: int, seed: int) -> FoldSplit:
    """Document-level fold assignment; sizes differ by at most one.

    Doc ids are sorted, shuffled by a seeded Fisher-Yates, then dealt
    round-robin, so the split is independent of file order.
    """
    if k < 2:
        raise CorpusError(f"fold count must be at least 2, got {k}")
    if k > len(corpus.documents):
        raise CorpusError(f"fold count {k} exceeds document count {len(corpus.documents)}")
    doc_ids = sorted(d.doc_id for d in corpus.documents)
    rng = Rng(seed)
    rng.shuffle(doc_ids)
    assignment = {doc_id: i % k for i, doc_id in enumerate(doc_ids)}
    return FoldSplit(k=k, assignment=assignment, seed=seed)


def split_documents(corpus: Corpus, folds: FoldSplit, fold: int) -> tuple[list[Document], list[Document]]:
    """(train, held-out) documents for one fold."""
    train, held = [], []
    for d in corpus.documents:
        (held if folds.assignment[d.doc_id] == fold else train).append(d)
    return train, held


def iter_labeled(documents: Iterable[Document]) -> Iterable[tuple[Document, list[RhetoricalRole]]]:
    for d in documents:
        yield d, d.labels()
