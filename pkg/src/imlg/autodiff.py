"""Minimal reverse-mode differentiation over dense float64 arrays.

Only the primitives the model needs: matmul, transpose, elementwise
add/sub/mul, column concatenation, relu, sigmoid, row log-softmax, full
sum, and scaling by a python float. Every op checks its output for
NaN/Inf and raises NonFiniteError immediately.
"""

from __future__ import annotations

import numpy as np


class NonFiniteError(ArithmeticError):
    pass


def _check(data: np.ndarray, op: str) -> np.ndarray:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"non-finite values produced by {op}")
    return data


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward", "requires_grad")

    def __init__(self, data, parents=(), backward=None, requires_grad=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._backward = backward
        if requires_grad is None:
            # explicit leaves participate in gradients; op outputs inherit
            requires_grad = any(p.requires_grad for p in parents) if parents else True
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    def _accum(self, g: np.ndarray):
        self.grad = g if self.grad is None else self.grad + g

    def backward(self):
        """Accumulate gradients into every reachable tensor. Each call is
        self-contained: grads in this subgraph are reset first."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar loss")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        for node in topo:
            node.grad = None
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def const(data) -> Tensor:
    """A tensor that takes part in forward math but never needs gradients."""
    return Tensor(data, requires_grad=False)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else const(x)


def _shape_match(a: Tensor, b: Tensor, op: str):
    if a.data.shape != b.data.shape:
        raise ValueError(f"shape mismatch in {op}: {a.data.shape} vs {b.data.shape}")


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.shape[-1] != b.data.shape[0]:
        raise ValueError(f"shape mismatch in matmul: {a.data.shape} @ {b.data.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = Tensor(_check(a.data @ b.data, "matmul"), (a, b))

    def backward(g):
        if a.requires_grad:
            a._accum(g @ b.data.T)
        if b.requires_grad:
            b._accum(a.data.T @ g)

    out._backward = backward
    return out


def transpose(a) -> Tensor:
    a = _wrap(a)
    out = Tensor(a.data.T, (a,))
    out._backward = lambda g: a.requires_grad and a._accum(g.T)
    return out


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _shape_match(a, b, "add")
    with np.errstate(over="ignore", invalid="ignore"):
        out = Tensor(_check(a.data + b.data, "add"), (a, b))

    def backward(g):
        if a.requires_grad:
            a._accum(g)
        if b.requires_grad:
            b._accum(g)

    out._backward = backward
    return out


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _shape_match(a, b, "sub")
    with np.errstate(over="ignore", invalid="ignore"):
        out = Tensor(_check(a.data - b.data, "sub"), (a, b))

    def backward(g):
        if a.requires_grad:
            a._accum(g)
        if b.requires_grad:
            b._accum(-g)

    out._backward = backward
    return out


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _shape_match(a, b, "mul")
    with np.errstate(over="ignore", invalid="ignore"):
        out = Tensor(_check(a.data * b.data, "mul"), (a, b))

    def backward(g):
        if a.requires_grad:
            a._accum(g * b.data)
        if b.requires_grad:
            b._accum(g * a.data)

    out._backward = backward
    return out


def scale(a, c: float) -> Tensor:
    a = _wrap(a)
    with np.errstate(over="ignore", invalid="ignore"):
        out = Tensor(_check(a.data * c, "scale"), (a,))
    out._backward = lambda g: a.requires_grad and a._accum(g * c)
    return out


def concat_cols(parts: list) -> Tensor:
    parts = [_wrap(p) for p in parts]
    rows = {p.data.shape[0] for p in parts}
    if len(rows) != 1:
        raise ValueError(f"shape mismatch in concat_cols: rows {sorted(rows)}")
    out = Tensor(np.concatenate([p.data for p in parts], axis=1), tuple(parts))
    widths = [p.data.shape[1] for p in parts]

    def backward(g):
        at = 0
        for p, w in zip(parts, widths):
            if p.requires_grad:
                p._accum(g[:, at : at + w])
            at += w

    out._backward = backward
    return out


def relu(a) -> Tensor:
    a = _wrap(a)
    out = Tensor(np.maximum(a.data, 0.0), (a,))
    out._backward = lambda g: a.requires_grad and a._accum(g * (a.data > 0.0))
    return out


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a) -> Tensor:
    a = _wrap(a)
    s = stable_sigmoid(a.data)
    out = Tensor(_check(s, "sigmoid"), (a,))
    out._backward = lambda g: a.requires_grad and a._accum(g * s * (1.0 - s))
    return out


def log_softmax_rows(a) -> Tensor:
    a = _wrap(a)
    z = a.data - a.data.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    out = Tensor(_check(logp, "log_softmax_rows"), (a,))
    softmax = np.exp(logp)
    out._backward = lambda g: a.requires_grad and a._accum(g - softmax * g.sum(axis=1, keepdims=True))
    return out


def sum_all(a) -> Tensor:
    a = _wrap(a)
    out = Tensor(np.array(a.data.sum()), (a,))
    out._backward = lambda g: a.requires_grad and a._accum(np.full_like(a.data, float(g)))
    return out


def finite_difference(fn, arrays: dict, h: float = 1e-5) -> dict:
    """Central-difference gradients of fn() with respect to the given
    arrays, which fn must read in place. Test oracle, not a fast path."""
    grads = {}
    for key, arr in arrays.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for idx in range(flat.size):
            keep = flat[idx]
            flat[idx] = keep + h
            up = fn()
            flat[idx] = keep - h
            down = fn()
            flat[idx] = keep
            gflat[idx] = (up - down) / (2.0 * h)
        grads[key] = g
    return grads
