"""Neural building blocks: linear maps, multi-head self-attention encoder
blocks over a document's sentence sequence, and a BiLSTM.

No positional encoding is added anywhere: sentence order is supplied by the
BiLSTM stage, which makes the encoder stack permutation-equivariant (a
property the tests rely on).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tensor import Rng, Tensor, glorot


@dataclass
class Linear:
    W: Tensor  # d_out x d_in
    b: Tensor  # d_out

    @classmethod
    def init(cls, d_in: int, d_out: int, rng: Rng, prefix: str = "linear") -> "Linear":
        return cls(W=glorot((d_out, d_in), rng, name=f"{prefix}.W"),
                   b=Tensor(np.zeros(d_out), requires_grad=True, name=f"{prefix}.b"))

    def __call__(self, x: Tensor) -> Tensor:
        # x: n x d_in -> n x d_out
        return T.add(T.matmul(x, T.transpose(self.W)), self.b)

    def parameters(self) -> list[Tensor]:
        return [self.W, self.b]


@dataclass
class MultiHeadAttention:
    d_model: int
    heads: int
    wq: Tensor
    wk: Tensor
    wv: Tensor
    wo: Tensor

    @classmethod
    def init(cls, d_model: int, heads: int, rng: Rng, prefix: str = "attn") -> "MultiHeadAttention":
        if d_model % heads != 0:
            raise ValueError(f"head count {heads} does not divide model width {d_model}")
        return cls(
            d_model=d_model, heads=heads,
            wq=glorot((d_model, d_model), rng, name=f"{prefix}.wq"),
            wk=glorot((d_model, d_model), rng, name=f"{prefix}.wk"),
            wv=glorot((d_model, d_model), rng, name=f"{prefix}.wv"),
            wo=glorot((d_model, d_model), rng, name=f"{prefix}.wo"),
        )

    @property
    def d_k(self) -> int:
        return self.d_model // self.heads

    def __call__(self, x: Tensor) -> Tensor:
        """softmax(Q_i K_i^T / sqrt(d_k)) V_i per head, concatenated, projected.

        Full bidirectional attention over all rows; no masking.
        """
        q = T.matmul(x, self.wq)
        k = T.matmul(x, self.wk)
        v = T.matmul(x, self.wv)
        d_k = self.d_k
        outs = []
        for h in range(self.heads):
            qh = T.narrow(q, 1, h * d_k, d_k)
            kh = T.narrow(k, 1, h * d_k, d_k)
            vh = T.narrow(v, 1, h * d_k, d_k)
            logits = T.scale(T.matmul(qh, T.transpose(kh)), 1.0 / math.sqrt(d_k))
            weights = T.softmax_rows(logits)
            outs.append(T.matmul(weights, vh))
        return T.matmul(T.concat(outs, axis=1), self.wo)

    def attention_weights(self, x: Tensor) -> list[np.ndarray]:
        """Per-head n x n attention matrices (forward values only)."""
        q = T.matmul(x, self.wq).data
        k = T.matmul(x, self.wk).data
        d_k = self.d_k
        weights = []
        for h in range(self.heads):
            logits = q[:, h * d_k:(h + 1) * d_k] @ k[:, h * d_k:(h + 1) * d_k].T / math.sqrt(d_k)
            shifted = np.exp(logits - logits.max(axis=-1, keepdims=True))
            weights.append(shifted / shifted.sum(axis=-1, keepdims=True))
        return weights

    def parameters(self) -> list[Tensor]:
        return [self.wq, self.wk, self.wv, self.wo]


@dataclass
class EncoderBlock:
    """Post-norm transformer block: LN(x + Attn(x)), then LN(. + FFN(.))."""

    attention: MultiHeadAttention
    ff1: Linear
    ff2: Linear
    ln1_gamma: Tensor
    ln1_beta: Tensor
    ln2_gamma: Tensor
    ln2_beta: Tensor
    dropout_keep: float = 0.9

    @classmethod
    def init(cls, d_model: int, heads: int, rng: Rng, prefix: str = "block",
             dropout_keep: float = 0.9) -> "EncoderBlock":
        return cls(
            attention=MultiHeadAttention.init(d_model, heads, rng, prefix=f"{prefix}.attn"),
            ff1=Linear.init(d_model, 4 * d_model, rng, prefix=f"{prefix}.ff1"),
            ff2=Linear.init(4 * d_model, d_model, rng, prefix=f"{prefix}.ff2"),
            ln1_gamma=Tensor(np.ones(d_model), requires_grad=True, name=f"{prefix}.ln1.gamma"),
            ln1_beta=Tensor(np.zeros(d_model), requires_grad=True, name=f"{prefix}.ln1.beta"),
            ln2_gamma=Tensor(np.ones(d_model), requires_grad=True, name=f"{prefix}.ln2.gamma"),
            ln2_beta=Tensor(np.zeros(d_model), requires_grad=True, name=f"{prefix}.ln2.beta"),
            dropout_keep=dropout_keep,
        )

    def __call__(self, x: Tensor, rng: Rng | None = None, training: bool = False) -> Tensor:
        attn = self.attention(x)
        if training and rng is not None:
            attn = T.dropout(attn, self.dropout_keep, rng, training=True)
        x = T.layer_norm(T.add(x, attn), self.ln1_gamma, self.ln1_beta)
        ff = self.ff2(T.relu(self.ff1(x)))
        if training and rng is not None:
            ff = T.dropout(ff, self.dropout_keep, rng, training=True)
        return T.layer_norm(T.add(x, ff), self.ln2_gamma, self.ln2_beta)

    def parameters(self) -> list[Tensor]:
        return (self.attention.parameters() + self.ff1.parameters() + self.ff2.parameters()
                + [self.ln1_gamma, self.ln1_beta, self.ln2_gamma, self.ln2_beta])


def encoder_forward(blocks: list[EncoderBlock], x: Tensor,
                    rng: Rng | None = None, training: bool = False) -> Tensor:
    """Apply blocks in sequence; zero blocks is the identity."""
    for block in blocks:
        x = block(x, rng=rng, training=training)
    return x


@dataclass
class BiLstm:
    """Bidirectional LSTM; output row t is [h_forward(t) ; h_backward(t)]."""

    d_in: int
    hidden: int
    # per direction: input weights d_in x 4H, recurrent H x 4H, bias 4H
    w_fwd: Tensor
    u_fwd: Tensor
    b_fwd: Tensor
    w_bwd: Tensor
    u_bwd: Tensor
    b_bwd: Tensor

    @classmethod
    def init(cls, d_in: int, hidden: int, rng: Rng, prefix: str = "lstm") -> "BiLstm":
        return cls(
            d_in=d_in, hidden=hidden,
            w_fwd=glorot((d_in, 4 * hidden), rng, name=f"{prefix}.w_fwd"),
            u_fwd=glorot((hidden, 4 * hidden), rng, name=f"{prefix}.u_fwd"),
            b_fwd=Tensor(np.zeros(4 * hidden), requires_grad=True, name=f"{prefix}.b_fwd"),
            w_bwd=glorot((d_in, 4 * hidden), rng, name=f"{prefix}.w_bwd"),
            u_bwd=glorot((hidden, 4 * hidden), rng, name=f"{prefix}.u_bwd"),
            b_bwd=Tensor(np.zeros(4 * hidden), requires_grad=True, name=f"{prefix}.b_bwd"),
        )

    def _direction(self, x: Tensor, w: Tensor, u: Tensor, b: Tensor,
                   order: list[int]) -> list[Tensor]:
        n = x.data.shape[0]
        hid = self.hidden
        pre = T.add(T.matmul(x, w), b)  # n x 4H, input part of every gate
        h = T.zeros((1, hid))
        c = T.zeros((1, hid))
        outputs: list[Tensor | None] = [None] * n
        for t in order:
            z = T.add(T.narrow(pre, 0, t, 1), T.matmul(h, u))
            i = T.sigmoid(T.narrow(z, 1, 0, hid))
            f = T.sigmoid(T.narrow(z, 1, hid, hid))
            g = T.tanh(T.narrow(z, 1, 2 * hid, hid))
            o = T.sigmoid(T.narrow(z, 1, 3 * hid, hid))
            c = T.add(T.mul(f, c), T.mul(i, g))
            h = T.mul(o, T.tanh(c))
            outputs[t] = h
        return outputs  # type: ignore[return-value]

    def __call__(self, x: Tensor) -> Tensor:
        if x.data.shape[1] != self.d_in:
            raise ValueError(f"BiLstm expects width {self.d_in}, got {x.data.shape[1]}")
        n = x.data.shape[0]
        fwd = self._direction(x, self.w_fwd, self.u_fwd, self.b_fwd, list(range(n)))
        bwd = self._direction(x, self.w_bwd, self.u_bwd, self.b_bwd, list(range(n - 1, -1, -1)))
        rows = [T.concat([fwd[t], bwd[t]], axis=1) for t in range(n)]
        return T.concat(rows, axis=0)  # n x 2H

    def parameters(self) -> list[Tensor]:
        return [self.w_fwd, self.u_fwd, self.b_fwd, self.w_bwd, self.u_bwd, self.b_bwd]
