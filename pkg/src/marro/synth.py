"""Deterministic synthetic corpus for end-to-end checks.

Labels are laid out in contiguous role blocks (labels mostly repeat across
adjacent sentences, as they do in real judgments), and each sentence's text
plants a label-specific token so the hash embedder makes the task learnable.
"""

from __future__ import annotations

from .corpus import Corpus, Document, ROLES, Sentence
from .embeddings import HashEmbedder, write_embedding_file
from .tensor import Rng

_MIN_BLOCK = 4
_MAX_BLOCK = 8
_FILLER_VOCAB = 40


def synth_corpus(n_docs: int, sentences_per_doc: int, seed: int) -> Corpus:
    if n_docs < 1 or sentences_per_doc < 1:
        raise ValueError(f"degenerate synthetic corpus size: {n_docs} x {sentences_per_doc}")
    rng = Rng(seed)
    documents = []
    for d in range(n_docs):
        sentences: list[Sentence] = []
        role_cursor = d % len(ROLES)
        while len(sentences) < sentences_per_doc:
            role = ROLES[role_cursor % len(ROLES)]
            role_cursor += 1
            block = _MIN_BLOCK + rng.randint(_MAX_BLOCK - _MIN_BLOCK + 1)
            for _ in range(block):
                if len(sentences) == sentences_per_doc:
                    break
                fill_a = rng.randint(_FILLER_VOCAB)
                fill_b = rng.randint(_FILLER_VOCAB)
                text = f"cue{role.name.lower()} filler{fill_a} filler{fill_b}"
                sentences.append(Sentence(index=len(sentences), text=text, label=role))
        documents.append(Document(doc_id=f"synth-{d:03d}", sentences=sentences))
    return Corpus(documents=documents, name=f"synth-{seed}")


def write_synth_embeddings(corpus: Corpus, dim: int, path) -> None:
    """Materialize hash embeddings for every sentence into a binary file."""
    embedder = HashEmbedder(dim=dim)
    records = []
    for doc in corpus.documents:
        for s in doc.sentences:
            records.append((doc.doc_id, s.index, embedder.embed(s.text)))
    write_embedding_file(path, dim, records)
