"""Sentence encoders behind one interface: encode(texts) -> n x width float32.

Encoder ids select the backend:
  hash:<dim>    deterministic hash encoder, no model weights needed
  hf:<model>    transformers AutoModel (hub id or local path), mean pooling
  st:<model>    sentence-transformers model
A bare id with no scheme is treated as hf:<id>.
"""

from __future__ import annotations

import numpy as np


class EncoderError(RuntimeError):
    pass


_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _splitmix_stream(seed: int, count: int) -> np.ndarray:
    """count uniform values in [-1, 1) from a splitmix64 stream."""
    with np.errstate(over="ignore"):
        ks = np.uint64(seed & _MASK64) + np.uint64(_GAMMA) * np.arange(1, count + 1,
                                                                       dtype=np.uint64)
        z = (ks ^ (ks >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) / float(1 << 53) * 2.0 - 1.0


def _fnv1a_64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


class HashEncoder:
    """Stateless token-hash embedder; same pipeline as the trainer's test
    embedder, so hash-encoded files are drop-in for synthetic experiments."""

    def __init__(self, dim: int):
        if dim < 1:
            raise EncoderError(f"hash encoder needs a positive dim, got {dim}")
        self.width = dim

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.width), dtype=np.float64)
        for row, text in enumerate(texts):
            tokens = text.lower().split()
            if not tokens:
                continue
            acc = np.zeros(self.width)
            for tok in tokens:
                acc += _splitmix_stream(_fnv1a_64(tok.encode("utf-8")), self.width)
            acc /= len(tokens)
            norm = float(np.linalg.norm(acc))
            out[row] = acc if norm == 0.0 else acc / norm
        return out.astype(np.float32)


class HfEncoder:
    """Mean-pooled last-hidden-layer states of a transformers model."""

    def __init__(self, model_id: str, batch_size: int = 32):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderError(f"transformers backend unavailable: {exc}") from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise EncoderError(f"failed to load encoder {model_id!r}: {exc}") from exc
        self.torch = torch
        self.model.eval()
        self.batch_size = batch_size
        self.width = int(self.model.config.hidden_size)

    def encode(self, texts: list[str]) -> np.ndarray:
        torch = self.torch
        torch.set_num_threads(1)  # keep reductions deterministic across runs
        rows = []
        with torch.no_grad():
            for start in range(0, len(texts), self.batch_size):
                batch = texts[start:start + self.batch_size]
                tokens = self.tokenizer(batch, padding=True, truncation=True,
                                        return_tensors="pt")
                hidden = self.model(**tokens).last_hidden_state
                mask = tokens["attention_mask"].unsqueeze(-1).to(hidden.dtype)
                pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
                rows.append(pooled.to(torch.float32).numpy())
        return np.concatenate(rows, axis=0) if rows else np.zeros((0, self.width), np.float32)


class StEncoder:
    """sentence-transformers model with its own pooling head."""

    def __init__(self, model_id: str, batch_size: int = 32):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderError(f"sentence-transformers backend unavailable: {exc}") from exc
        try:
            self.model = SentenceTransformer(model_id)
        except Exception as exc:
            raise EncoderError(f"failed to load encoder {model_id!r}: {exc}") from exc
        self.batch_size = batch_size
        self.width = int(self.model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        vecs = self.model.encode(texts, batch_size=self.batch_size,
                                 convert_to_numpy=True, show_progress_bar=False)
        return np.asarray(vecs, dtype=np.float32).reshape(len(texts), self.width)


def make_encoder(encoder_id: str, batch_size: int = 32):
    if ":" in encoder_id:
        scheme, _, rest = encoder_id.partition(":")
    else:
        scheme, rest = "hf", encoder_id
    if scheme == "hash":
        try:
            return HashEncoder(int(rest))
        except ValueError:
            raise EncoderError(f"hash encoder id must be hash:<dim>, got {encoder_id!r}") from None
    if scheme == "hf":
        return HfEncoder(rest, batch_size=batch_size)
    if scheme == "st":
        return StEncoder(rest, batch_size=batch_size)
    raise EncoderError(f"unknown encoder scheme {scheme!r} in {encoder_id!r}")
