"""Minimal reverse-mode automatic differentiation over numpy arrays.

Every op returns a :class:`Tensor` that remembers its parents and a closure
mapping its output gradient to parent gradients. :func:`backward` walks the
graph in reverse topological order. Inside :func:`no_grad` ops skip
recording, which keeps inference cheap.
"""

from __future__ import annotations

import contextlib
import threading

import numpy as np

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


class Tensor:
    __slots__ = ("value", "grad", "parents", "backward_fn", "requires_grad")

    def __init__(self, value, parents=(), backward_fn=None, requires_grad=False):
        self.value = value
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.value.shape

    def __len__(self):
        return len(self.value)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.value.shape})"


def parameter(value) -> Tensor:
    return Tensor(np.asarray(value, dtype=np.float64), requires_grad=True)


def constant(value) -> Tensor:
    return Tensor(np.asarray(value, dtype=np.float64))


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else constant(x)


def _make(value, parents, backward_fn) -> Tensor:
    if not grad_enabled() or not any(p.requires_grad for p in parents):
        return Tensor(value)
    return Tensor(value, parents, backward_fn, True)


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# -- elementwise ------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    sa, sb = a.value.shape, b.value.shape
    return _make(a.value + b.value, (a, b),
                 lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    av, bv = a.value, b.value
    return _make(av * bv, (a, b),
                 lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.value)
    return _make(y, (a,), lambda g: (g * (1.0 - y * y),))


def sigmoid(a: Tensor) -> Tensor:
    y = 0.5 * (1.0 + np.tanh(0.5 * a.value))
    return _make(y, (a,), lambda g: (g * y * (1.0 - y),))


def log(a: Tensor) -> Tensor:
    av = a.value
    return _make(np.log(av), (a,), lambda g: (g / av,))


# -- shape --------------------------------------------------------------------------

def getitem(a: Tensor, idx) -> Tensor:
    shape = a.value.shape

    def back(g):
        out = np.zeros(shape)
        if isinstance(idx, (slice, int)):
            out[idx] = g
        else:
            np.add.at(out, idx, g)
        return (out,)

    return _make(a.value[idx], (a,), back)


def concat(parts, axis: int = 0) -> Tensor:
    parts = [_wrap(p) for p in parts]
    sizes = np.cumsum([p.value.shape[axis] for p in parts])[:-1]
    return _make(np.concatenate([p.value for p in parts], axis=axis), tuple(parts),
                 lambda g: tuple(np.split(g, sizes, axis=axis)))


def stack(parts) -> Tensor:
    parts = [_wrap(p) for p in parts]
    return _make(np.stack([p.value for p in parts]), tuple(parts),
                 lambda g: tuple(g[i] for i in range(len(parts))))


def rows(table: Tensor, ids) -> Tensor:
    """Embedding lookup: ``table[ids]`` with scatter-add backward."""
    ids = np.asarray(ids)
    shape = table.value.shape

    def back(g):
        out = np.zeros(shape)
        np.add.at(out, ids, g)
        return (out,)

    return _make(table.value[ids], (table,), back)


def total(a: Tensor) -> Tensor:
    shape = a.value.shape
    return _make(np.sum(a.value), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


# -- linear algebra -----------------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    av, bv = a.value, b.value

    def back(g):
        if av.ndim == 2 and bv.ndim == 1:
            return np.outer(g, bv), av.T @ g
        if av.ndim == 1 and bv.ndim == 2:
            return bv @ g, np.outer(av, g)
        if av.ndim == 1 and bv.ndim == 1:
            return g * bv, g * av
        return g @ bv.T, av.T @ g

    return _make(av @ bv, (a, b), back)


def affine(W: Tensor, x, b: Tensor) -> Tensor:
    """``W @ x + b`` as one node."""
    x = _wrap(x)
    Wv, xv = W.value, x.value

    def back(g):
        return np.outer(g, xv), Wv.T @ g, g

    return _make(Wv @ xv + b.value, (W, x, b), back)


# -- normalizers --------------------------------------------------------------------

def softmax(a: Tensor) -> Tensor:
    z = a.value - a.value.max()
    e = np.exp(z)
    y = e / e.sum()
    return _make(y, (a,), lambda g: (y * (g - np.dot(g, y)),))


def log_softmax(a: Tensor) -> Tensor:
    z = a.value - a.value.max()
    lse = np.log(np.exp(z).sum())
    y = z - lse
    p = np.exp(y)
    return _make(y, (a,), lambda g: (g - p * g.sum(),))


def logsumexp(a: Tensor) -> Tensor:
    m = a.value.max()
    e = np.exp(a.value - m)
    s = e.sum()
    return _make(m + np.log(s), (a,), lambda g: (g * e / s,))


# -- recurrent cell -----------------------------------------------------------------

def lstm_cell(W: Tensor, b: Tensor, x, h, c) -> tuple[Tensor, Tensor]:
    """One LSTM step with gate rows ordered (input, forget, output, candidate).

    Returns ``(h_new, c_new)``; the gate math is fused into a single node.
    """
    x, h, c = _wrap(x), _wrap(h), _wrap(c)
    H = h.value.shape[0]
    inp = np.concatenate([x.value, h.value])
    pre = W.value @ inp + b.value
    gi = 0.5 * (1.0 + np.tanh(0.5 * pre[:H]))
    gf = 0.5 * (1.0 + np.tanh(0.5 * pre[H:2 * H]))
    go = 0.5 * (1.0 + np.tanh(0.5 * pre[2 * H:3 * H]))
    gg = np.tanh(pre[3 * H:])
    c_new = gf * c.value + gi * gg
    tc = np.tanh(c_new)
    h_new = go * tc
    nx = x.value.shape[0]
    Wv = W.value

    def back(g):
        dh, dc = g[:H], g[H:]
        dc = dc + dh * go * (1.0 - tc * tc)
        dpre = np.concatenate([
            dc * gg * gi * (1.0 - gi),
            dc * c.value * gf * (1.0 - gf),
            dh * tc * go * (1.0 - go),
            dc * gi * (1.0 - gg * gg),
        ])
        dinp = Wv.T @ dpre
        return np.outer(dpre, inp), dpre, dinp[:nx], dinp[nx:], dc * gf

    hc = _make(np.concatenate([h_new, c_new]), (W, b, x, h, c), back)
    return getitem(hc, slice(0, H)), getitem(hc, slice(H, 2 * H))


# -- backward pass ------------------------------------------------------------------

def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every reachable parameter."""
    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    grads = {id(loss): np.ones_like(loss.value)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.backward_fn is None:
            node.grad = g if node.grad is None else node.grad + g
            continue
        for p, pg in zip(node.parents, node.backward_fn(g)):
            if not p.requires_grad:
                continue
            prev = grads.get(id(p))
            grads[id(p)] = pg if prev is None else prev + pg
