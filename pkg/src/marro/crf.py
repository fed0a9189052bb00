"""Exact linear-chain CRF over emission scores.

Scores decompose as start[y0] + sum_t E[t][y_t] + sum_t T[y_{t-1}][y_t]
+ stop[y_{n-1}]. The log-partition runs the forward recursion in log space
and is differentiable with respect to emissions, transitions, start, and
stop. Viterbi decoding and a full-enumeration oracle round out the layer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .tensor import Rng, Tensor


@dataclass
class CrfParams:
    """Transition/start/stop potentials for L labels; all entries learnable."""

    transitions: Tensor  # L x L, [i][j] = score of moving from label i to j
    start: Tensor        # L
    stop: Tensor         # L

    @classmethod
    def init(cls, num_labels: int, rng: Rng, scale: float = 0.1, prefix: str = "crf") -> "CrfParams":
        return cls(
            transitions=Tensor(rng.uniform_array((num_labels, num_labels), -scale, scale),
                               requires_grad=True, name=f"{prefix}.transitions"),
            start=Tensor(rng.uniform_array((num_labels,), -scale, scale),
                         requires_grad=True, name=f"{prefix}.start"),
            stop=Tensor(rng.uniform_array((num_labels,), -scale, scale),
                        requires_grad=True, name=f"{prefix}.stop"),
        )

    @property
    def num_labels(self) -> int:
        return self.start.data.shape[0]

    def parameters(self) -> list[Tensor]:
        return [self.transitions, self.start, self.stop]


def _check(params: CrfParams, emissions: Tensor, labels=None) -> int:
    n, num_labels = emissions.data.shape
    if num_labels != params.num_labels:
        raise ValueError(f"emission width {num_labels} != label count {params.num_labels}")
    if labels is not None:
        if len(labels) != n:
            raise ValueError(f"label sequence length {len(labels)} != emission rows {n}")
        if any(not 0 <= y < num_labels for y in labels):
            raise ValueError("label out of range")
    return n


def path_score(params: CrfParams, emissions: Tensor, labels: list[int]) -> Tensor:
    """Score of one label path, differentiable in all potentials."""
    n = _check(params, emissions, labels)
    score = T.gather_sum(emissions, list(range(n)), labels)
    score = T.add(score, _pick(params.start, labels[0]))
    if n > 1:
        score = T.add(score, T.gather_sum(params.transitions, labels[:-1], labels[1:]))
    score = T.add(score, _pick(params.stop, labels[-1]))
    return score


def _pick(vec: Tensor, idx: int) -> Tensor:
    return T.gather_sum(T.reshape(vec, (1, -1)), [0], [idx])


def log_partition(params: CrfParams, emissions: Tensor) -> Tensor:
    """log sum over all L^n paths of exp(path_score), by the forward recursion."""
    n = _check(params, emissions)
    alpha = T.add(params.start, T.narrow(emissions, 0, 0, 1))  # 1 x L
    for t in range(1, n):
        # alpha[i] + T[i][j], reduced over i, plus the next emission row
        scores = T.add(T.transpose(alpha), params.transitions)
        alpha = T.add(T.logsumexp(scores, axis=0), T.narrow(emissions, 0, t, 1))
    total = T.add(alpha, params.stop)
    return T.logsumexp(total, axis=None)


def nll(params: CrfParams, emissions: Tensor, labels: list[int]) -> Tensor:
    """Negative log-likelihood of the gold path; always >= 0."""
    return T.sub(log_partition(params, emissions), path_score(params, emissions, labels))


def viterbi(params: CrfParams, emissions: Tensor) -> tuple[list[int], float]:
    """Best-scoring path and its score; ties resolve to the smallest label index."""
    n = _check(params, emissions)
    E = emissions.data
    trans = params.transitions.data
    delta = params.start.data + E[0]
    back: list[np.ndarray] = []
    for t in range(1, n):
        scores = delta[:, None] + trans  # [i, j]
        back.append(np.argmax(scores, axis=0))  # first max = smallest i
        delta = scores.max(axis=0) + E[t]
    final = delta + params.stop.data
    best = int(np.argmax(final))
    path = [best]
    for bp in reversed(back):
        path.append(int(bp[path[-1]]))
    path.reverse()
    return path, float(final[best])


def brute_force_oracle(params: CrfParams, emissions: Tensor) -> tuple[float, list[int]]:
    """Exact log-partition and argmax path by full enumeration (test oracle).

    The argmax tie-break matches viterbi(): among equal-scoring paths the one
    whose labels are smallest from the last position backwards wins.
    """
    n, num_labels = emissions.data.shape
    if num_labels ** n > 10 ** 6:
        raise ValueError(f"instance too large to enumerate: {num_labels}^{n} paths")
    E = emissions.data
    trans = params.transitions.data
    start = params.start.data
    stop = params.stop.data
    scores = []
    best_path: tuple[int, ...] | None = None
    best_score = -np.inf
    best_key: tuple[int, ...] | None = None
    for path in itertools.product(range(num_labels), repeat=n):
        s = start[path[0]] + stop[path[-1]]
        s += sum(E[t][path[t]] for t in range(n))
        s += sum(trans[path[t - 1]][path[t]] for t in range(1, n))
        scores.append(s)
        key = tuple(reversed(path))
        if s > best_score or (s == best_score and (best_key is None or key < best_key)):
            best_score = s
            best_path = path
            best_key = key
    arr = np.asarray(scores)
    m = arr.max()
    log_z = float(m + np.log(np.exp(arr - m).sum()))
    assert best_path is not None
    return log_z, list(best_path)


def path_marginals(params: CrfParams, emissions: Tensor) -> np.ndarray:
    """Per-position label marginals by enumeration (test oracle)."""
    n, num_labels = emissions.data.shape
    log_z, _ = brute_force_oracle(params, emissions)
    marginals = np.zeros((n, num_labels))
    E = emissions.data
    trans = params.transitions.data
    for path in itertools.product(range(num_labels), repeat=n):
        s = params.start.data[path[0]] + params.stop.data[path[-1]]
        s += sum(E[t][path[t]] for t in range(n))
        s += sum(trans[path[t - 1]][path[t]] for t in range(1, n))
        p = np.exp(s - log_z)
        for t, y in enumerate(path):
            marginals[t, y] += p
    return marginals
