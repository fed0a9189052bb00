"""Per-sentence embedding providers.

Two sources: a precomputed binary file (vectors produced offline by any
sentence encoder) and a deterministic hash embedder used for tests and
synthetic experiments. Both expose the same lookup surface so models never
know which one feeds them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Document
from .tensor import Rng, Tensor, _MASK64

MAGIC = b"MARROEMB"
VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class EmbeddingError(ValueError):
    pass


class MissingEmbedding(EmbeddingError):
    def __init__(self, doc_id: str, index: int):
        super().__init__(f"no embedding for doc_id={doc_id!r} sentence_index={index}")
        self.doc_id = doc_id
        self.index = index


@dataclass
class EmbeddingFile:
    """In-memory index of a binary embedding file: (doc_id, index) -> float32 vector."""

    dim: int
    entries: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.dim

    def vector(self, doc_id: str, index: int, text: str = "") -> np.ndarray:
        key = (doc_id, index)
        if key not in self.entries:
            raise MissingEmbedding(doc_id, index)
        return self.entries[key].astype(np.float64)


def write_embedding_file(path, dim: int, records: list[tuple[str, int, np.ndarray]]) -> None:
    """Records are (doc_id, sentence_index, vector); vectors stored as f32."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<Q", len(records)))
        for doc_id, index, vec in records:
            v = np.asarray(vec, dtype="<f4")
            if v.size != dim:
                raise EmbeddingError(f"vector for ({doc_id!r}, {index}) has {v.size} values, expected {dim}")
            raw = doc_id.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", index))
            fh.write(v.tobytes())


def load_embedding_file(path) -> EmbeddingFile:
    path = Path(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise EmbeddingError(f"{path.name}: bad magic, not an embedding file")
    version, dim = struct.unpack_from("<II", blob, 8)
    if version != VERSION:
        raise EmbeddingError(f"{path.name}: unsupported version {version}")
    (count,) = struct.unpack_from("<Q", blob, 16)
    pos = 24
    entries: dict[tuple[str, int], np.ndarray] = {}
    for _ in range(count):
        try:
            (id_len,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            doc_id = blob[pos:pos + id_len].decode("utf-8")
            if len(blob[pos:pos + id_len]) != id_len:
                raise struct.error("short read")
            pos += id_len
            (index,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=pos)
            pos += 4 * dim
        except (struct.error, ValueError):
            raise EmbeddingError(f"{path.name}: truncated record at byte {pos}") from None
        key = (doc_id, index)
        if key in entries:
            raise EmbeddingError(f"{path.name}: duplicate key {key}")
        entries[key] = vec.copy()
    return EmbeddingFile(dim=dim, entries=entries)


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


@dataclass
class HashEmbedder:
    """Stateless deterministic text embedder.

    Each lowercase whitespace token seeds a splitmix64 stream via FNV-1a of
    its UTF-8 bytes; the stream's first `dim` draws (mapped to [-1, 1]) are
    the token vector. Token vectors are averaged and L2-normalized.
    """

    dim: int

    @property
    def width(self) -> int:
        return self.dim

    def token_vector(self, token: str) -> np.ndarray:
        rng = Rng(fnv1a_64(token.encode("utf-8")))
        return rng.uniform_array((self.dim,), -1.0, 1.0)

    def embed(self, text: str) -> np.ndarray:
        tokens = text.lower().split()
        if not tokens:
            return np.zeros(self.dim)
        acc = np.zeros(self.dim)
        for tok in tokens:
            acc += self.token_vector(tok)
        acc /= len(tokens)
        norm = float(np.linalg.norm(acc))
        return acc if norm == 0.0 else acc / norm

    def vector(self, doc_id: str, index: int, text: str) -> np.ndarray:
        return self.embed(text)


def embed_document(provider, doc: Document) -> Tensor:
    """n x dim matrix whose row t embeds sentence t, widened to float64."""
    rows = [provider.vector(doc.doc_id, s.index, s.text) for s in doc.sentences]
    return Tensor(np.stack(rows).astype(np.float64))
