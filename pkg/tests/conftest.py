from pathlib import Path

import pytest

from marro.corpus import Corpus, Document, RhetoricalRole, Sentence

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"


def make_doc(doc_id: str, labels: list[RhetoricalRole], texts: list[str] | None = None) -> Document:
    if texts is None:
        texts = [f"sentence {i} of {doc_id}" for i in range(len(labels))]
    return Document(doc_id=doc_id,
                    sentences=[Sentence(index=i, text=t, label=l)
                               for i, (t, l) in enumerate(zip(texts, labels))])


def make_corpus(label_seqs: list[list[RhetoricalRole]], name: str = "test") -> Corpus:
    return Corpus(documents=[make_doc(f"d{i}", labs) for i, labs in enumerate(label_seqs)],
                  name=name)


@pytest.fixture
def tiny_corpus_path() -> Path:
    return FIXTURES / "tiny_corpus.jsonl"


@pytest.fixture
def tiny_annotations_path() -> Path:
    return FIXTURES / "tiny_annotations.jsonl"


@pytest.fixture
def tiny_embeddings_path() -> Path:
    return FIXTURES / "tiny_embeddings.bin"
