"""Dense float64 tensors with reverse-mode automatic differentiation.

Everything learnable in this package lives in a Tensor. Operations build an
implicit DAG; Tensor.backward() walks it once in reverse topological order.
Gradients are only propagated into tensors (and subgraphs) that require them.
"""

from __future__ import annotations

import json
from typing import Callable, Iterable, Sequence

import numpy as np

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def _splitmix_finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class Rng:
    """splitmix64 stream; identical seed gives an identical stream."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _SPLITMIX_GAMMA) & _MASK64
        return _splitmix_finalize(self.state)

    def uniform(self) -> float:
        # 53 high bits -> [0, 1)
        return (self.next_u64() >> 11) / float(1 << 53)

    def randint(self, n: int) -> int:
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]

    def _next_block(self, n: int) -> np.ndarray:
        """Vectorized batch of n raw u64 draws, same stream as next_u64."""
        base = np.uint64(self.state)
        with np.errstate(over="ignore"):
            ks = base + np.uint64(_SPLITMIX_GAMMA) * np.arange(1, n + 1, dtype=np.uint64)
            z = (ks ^ (ks >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * _SPLITMIX_GAMMA) & _MASK64
        return z

    def uniform_array(self, shape, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        u = (self._next_block(n) >> np.uint64(11)).astype(np.float64) / float(1 << 53)
        return (low + (high - low) * u).reshape(shape)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to `shape` after numpy broadcasting in forward."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        # (parent, fn) pairs; fn maps the upstream grad to this parent's grad
        self._parents: tuple = ()
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"<Tensor{tag} shape={self.shape} requires_grad={self.requires_grad}>"

    def item(self) -> float:
        return self.data.item()

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent, _ in node._parents:
                if id(parent) not in seen and parent.requires_grad:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            g = node.grad
            for parent, fn in node._parents:
                if not parent.requires_grad:
                    continue
                contrib = fn(g)
                parent.grad = contrib if parent.grad is None else parent.grad + contrib


def _make(data: np.ndarray, parents: Sequence[tuple[Tensor, Callable]]) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p, _ in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
    return out


def tensor(data, requires_grad: bool = False, name: str = "") -> Tensor:
    return Tensor(data, requires_grad=requires_grad, name=name)


def zeros(shape, requires_grad: bool = False, name: str = "") -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=requires_grad, name=name)


def glorot(shape: tuple[int, int], rng: Rng, name: str = "") -> Tensor:
    """Weight init: uniform(-s, s), s = sqrt(6 / (fan_in + fan_out))."""
    fan_in, fan_out = shape[0], shape[1]
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform_array(shape, -s, s), requires_grad=True, name=name)


# ---------------------------------------------------------------------------
# primitive operations


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data
    return _make(data, [
        (a, lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda g: _unbroadcast(g, b.data.shape)),
    ])


def sub(a: Tensor, b: Tensor) -> Tensor:
    data = a.data - b.data
    return _make(data, [
        (a, lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda g: _unbroadcast(-g, b.data.shape)),
    ])


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data
    return _make(data, [
        (a, lambda g: _unbroadcast(g * b.data, a.data.shape)),
        (b, lambda g: _unbroadcast(g * a.data, b.data.shape)),
    ])


def scale(a: Tensor, c: float) -> Tensor:
    return _make(a.data * c, [(a, lambda g: g * c)])


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    data = a.data @ b.data
    return _make(data, [
        (a, lambda g: g @ b.data.T),
        (b, lambda g: a.data.T @ g),
    ])


def transpose(a: Tensor) -> Tensor:
    return _make(a.data.T, [(a, lambda g: g.T)])


def reshape(a: Tensor, shape) -> Tensor:
    return _make(a.data.reshape(shape), [(a, lambda g: g.reshape(a.data.shape))])


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)
    return _make(data, [(a, lambda g: g * (1.0 - data * data))])


def sigmoid(a: Tensor) -> Tensor:
    data = np.where(a.data >= 0, 1.0 / (1.0 + np.exp(-np.abs(a.data))),
                    np.exp(-np.abs(a.data)) / (1.0 + np.exp(-np.abs(a.data))))
    return _make(data, [(a, lambda g: g * data * (1.0 - data))])


def relu(a: Tensor) -> Tensor:
    data = np.maximum(a.data, 0.0)
    return _make(data, [(a, lambda g: g * (a.data > 0.0))])


def sum_all(a: Tensor) -> Tensor:
    return _make(np.asarray(a.data.sum()), [(a, lambda g: np.broadcast_to(g, a.data.shape))])


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice along one axis."""
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)

    def back(g, index=index):
        full = np.zeros_like(a.data)
        full[index] = g
        return full

    return _make(a.data[index].copy(), [(a, back)])


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    data = np.concatenate([p.data for p in parts], axis=axis)
    parents = []
    offset = 0
    for p in parts:
        extent = p.data.shape[axis]

        def back(g, start=offset, length=extent):
            index = [slice(None)] * g.ndim
            index[axis] = slice(start, start + length)
            return g[tuple(index)]

        parents.append((p, back))
        offset += extent
    return _make(data, parents)


def softmax_rows(a: Tensor) -> Tensor:
    """Row-wise softmax with max subtraction; rows sum to 1."""
    if np.isnan(a.data).any():
        raise ValueError("softmax_rows: NaN in input")
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        return (g - (g * data).sum(axis=-1, keepdims=True)) * data

    return _make(data, [(a, back)])


def logsumexp(a: Tensor, axis: int | None = None) -> Tensor:
    """Overflow-safe log(sum(exp(x))) over one axis or the whole tensor."""
    if a.data.size == 0:
        raise ValueError("logsumexp: empty input")
    if axis is None:
        m = a.data.max()
        data = np.asarray(m + np.log(np.exp(a.data - m).sum()))

        def back(g):
            return g * np.exp(a.data - data)

        return _make(data, [(a, back)])

    m = a.data.max(axis=axis, keepdims=True)
    data = np.log(np.exp(a.data - m).sum(axis=axis, keepdims=True)) + m
    data = np.squeeze(data, axis=axis)

    def back_axis(g):
        ge = np.expand_dims(g, axis)
        de = np.expand_dims(data, axis)
        return ge * np.exp(a.data - de)

    return _make(data, [(a, back_axis)])


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale+shift."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    data = xhat * gamma.data + beta.data

    def back_x(g):
        gy = g * gamma.data
        return inv * (gy - gy.mean(axis=-1, keepdims=True)
                      - xhat * (gy * xhat).mean(axis=-1, keepdims=True))

    def back_gamma(g):
        return _unbroadcast(g * xhat, gamma.data.shape)

    def back_beta(g):
        return _unbroadcast(g, beta.data.shape)

    return _make(data, [(x, back_x), (gamma, back_gamma), (beta, back_beta)])


def dropout(x: Tensor, keep: float, rng: Rng, training: bool) -> Tensor:
    """Inverted dropout: kept units scaled by 1/keep. Identity in eval mode."""
    if not 0.0 < keep <= 1.0:
        raise ValueError(f"dropout keep-probability must be in (0, 1], got {keep}")
    if not training or keep == 1.0:
        return x
    mask = (rng.uniform_array(x.data.shape) < keep).astype(np.float64) / keep
    return _make(x.data * mask, [(x, lambda g: g * mask)])


def gather_sum(x: Tensor, rows: Sequence[int], cols: Sequence[int]) -> Tensor:
    """Sum of x[rows[i], cols[i]]; repeated positions accumulate in backward."""
    r = np.asarray(rows, dtype=np.intp)
    c = np.asarray(cols, dtype=np.intp)
    data = np.asarray(x.data[r, c].sum())

    def back(g):
        full = np.zeros_like(x.data)
        np.add.at(full, (r, c), g)
        return full

    return _make(data, [(x, back)])


# ---------------------------------------------------------------------------
# verification and parameter management


def grad_check(f: Callable[[], Tensor], params: Iterable[Tensor], h: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    f must be deterministic (run layers in eval mode). Error per element is
    |g - fd| / max(1e-8, |g| + |fd|).
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    out = f()
    out.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    worst = 0.0
    for p, g in zip(params, analytic):
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = f().item()
            flat[i] = orig - h
            f_minus = f().item()
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * h)
            if not (np.isfinite(fd) and np.isfinite(gflat[i])):
                raise FloatingPointError("grad_check: non-finite value encountered")
            err = abs(gflat[i] - fd) / max(1e-8, abs(gflat[i]) + abs(fd))
            if err > worst:
                worst = err
    for p in params:
        p.zero_grad()
    return worst


def global_norm(params: Iterable[Tensor]) -> float:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    return float(np.sqrt(total))


def clip_gradients(params: Sequence[Tensor], max_norm: float) -> float:
    """Scale all gradients so the global norm is at most max_norm."""
    norm = global_norm(params)
    if norm > max_norm and norm > 0.0:
        factor = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * factor
    return norm


def sgd_step(params: Sequence[Tensor], lr: float) -> None:
    for p in params:
        if p.grad is not None:
            p.data -= lr * p.grad
            p.grad = None


# ---------------------------------------------------------------------------
# checkpoint io: one-line JSON manifest, then a little-endian float32 blob


def save_checkpoint(path, named_tensors: Sequence[tuple[str, Tensor]], extra: dict | None = None) -> None:
    manifest: dict = dict(extra or {})
    entries = []
    offset = 0
    blobs = []
    for name, t in named_tensors:
        arr = t.data.astype("<f4").reshape(-1)
        entries.append({"name": name, "shape": list(t.data.shape),
                        "offset": offset, "len": int(arr.size)})
        offset += int(arr.size)
        blobs.append(arr.tobytes())
    manifest["tensors"] = entries
    with open(path, "wb") as fh:
        fh.write(json.dumps(manifest, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Returns (manifest-without-tensors, name -> float64 array)."""
    with open(path, "rb") as fh:
        header = fh.readline()
        manifest = json.loads(header.decode("utf-8"))
        blob = fh.read()
    values = np.frombuffer(blob, dtype="<f4")
    tensors: dict[str, np.ndarray] = {}
    for entry in manifest.pop("tensors"):
        chunk = values[entry["offset"]:entry["offset"] + entry["len"]]
        if chunk.size != entry["len"]:
            raise ValueError(f"checkpoint truncated at tensor {entry['name']!r}")
        tensors[entry["name"]] = chunk.astype(np.float64).reshape(entry["shape"])
    return manifest, tensors
