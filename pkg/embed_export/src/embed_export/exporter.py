"""Corpus reading, optional projection/normalization, and the binary
embedding-file writer.

File layout (little-endian): magic MARROEMB, u32 version = 1, u32 dim,
u64 record count, then per record: u16 doc-id byte length, doc-id UTF-8
bytes, u32 sentence index, dim float32 values.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .encoders import EncoderError, HashEncoder, _splitmix_stream, make_encoder

MAGIC = b"MARROEMB"
VERSION = 1


class ExportError(RuntimeError):
    pass


@dataclass
class ExportJob:
    corpus_path: str
    encoder_id: str
    out_path: str
    target_dim: int = 0       # 0 = keep the encoder's own width
    normalize: bool = False
    batch_size: int = 32


def read_corpus_sentences(path) -> list[tuple[str, int, str]]:
    """(doc_id, sentence_index, text) triples in document order."""
    triples = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"line {lineno}: malformed JSON: {exc}") from None
            doc_id = obj.get("doc_id")
            sentences = obj.get("sentences")
            if not isinstance(doc_id, str) or not isinstance(sentences, list) or not sentences:
                raise ExportError(f"line {lineno}: expected doc_id and nonempty sentences")
            if doc_id in seen:
                raise ExportError(f"line {lineno}: duplicate doc_id {doc_id!r}")
            seen.add(doc_id)
            for index, s in enumerate(sentences):
                triples.append((doc_id, index, s.get("text", "")))
    if not triples:
        raise ExportError(f"{path}: no sentences to encode")
    return triples


def projection_matrix(width: int, dim: int) -> np.ndarray:
    """Fixed seeded linear projection; deterministic for a (width, dim) pair."""
    seed = (width * 0x1_0000_0001 + dim) & ((1 << 64) - 1)
    flat = _splitmix_stream(seed, width * dim)
    return (flat.reshape(width, dim) / np.sqrt(width)).astype(np.float32)


def write_embedding_file(path, dim: int, records) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<Q", len(records)))
        for doc_id, index, vec in records:
            raw = doc_id.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", index))
            fh.write(np.asarray(vec, dtype="<f4").tobytes())


def export(job: ExportJob) -> int:
    """Encode every sentence and write the embedding file; returns the count."""
    encoder = make_encoder(job.encoder_id, batch_size=job.batch_size)
    if job.target_dim and isinstance(encoder, HashEncoder) \
            and encoder.width != job.target_dim:
        raise EncoderError(
            f"dim mismatch: encoder {job.encoder_id!r} is {encoder.width}-wide "
            f"but --dim asks for {job.target_dim}")
    triples = read_corpus_sentences(job.corpus_path)
    vectors = encoder.encode([text for _, _, text in triples])
    if vectors.shape != (len(triples), encoder.width):
        raise ExportError(f"encoder returned shape {vectors.shape}, "
                          f"expected ({len(triples)}, {encoder.width})")
    dim = encoder.width
    if job.target_dim and job.target_dim != encoder.width:
        vectors = vectors @ projection_matrix(encoder.width, job.target_dim)
        dim = job.target_dim
    if job.normalize:
        norms = np.linalg.norm(vectors.astype(np.float64), axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        vectors = (vectors / norms).astype(np.float32)
    records = [(doc_id, index, vectors[row])
               for row, (doc_id, index, _) in enumerate(triples)]
    write_embedding_file(job.out_path, dim, records)
    return len(records)
