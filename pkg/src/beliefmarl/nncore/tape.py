"""Reverse-mode gradient accumulation on a per-forward computation tape.

Everything runs in float64 numpy. A :class:`Tape` records one forward
computation; calling :meth:`Tape.backward` on a scalar output walks the
recorded nodes in reverse and accumulates gradients, finally adding them
into the grad buffers of any :class:`~beliefmarl.nncore.params.Param`
wrapped through :meth:`Tape.param`. Values wrapped with :meth:`Tape.const`
participate in the forward pass but never leak gradients to parameters,
which is how target networks stay frozen.

Ops are deliberately minimal: dense algebra, the pointwise nonlinearities
the networks need, reductions, and the gather/logsumexp pair used for
categorical log-probabilities. No graph survives between tapes.
"""

from __future__ import annotations

import numpy as np


class Var:
    """A tape-tracked array value with a lazily allocated gradient."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)


def _as_f64(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _accum(var: Var, grad: np.ndarray) -> None:
    # grads are never mutated in place, so sharing array objects is safe
    if var.grad is None:
        var.grad = grad
    else:
        var.grad = var.grad + grad


class Tape:
    """Records one forward computation for a single reverse sweep.

    A tape is cheap and single-use: build the loss, call ``backward`` once,
    throw the tape away. Forward-only evaluation (acting, target networks)
    simply never calls ``backward``.
    """

    def __init__(self):
        self._nodes: list = []
        self._param_vars: dict = {}

    # ---- variable creation -------------------------------------------------

    def param(self, p) -> Var:
        """Wrap a Param; its grad buffer receives gradients on backward.

        Wrapping the same Param twice returns the same Var, so weight
        sharing (GRU steps, shared policies) accumulates naturally.
        """
        entry = self._param_vars.get(id(p))
        if entry is None:
            entry = (p, Var(p.value))
            self._param_vars[id(p)] = entry
        return entry[1]

    def const(self, value) -> Var:
        """Wrap raw data; gradients may reach it but go nowhere."""
        return Var(_as_f64(value))

    # ---- primitive ops -----------------------------------------------------

    def _push(self, out: Var, backward) -> Var:
        self._nodes.append((out, backward))
        return out

    def matmul(self, a: Var, b: Var) -> Var:
        out = Var(a.value @ b.value)

        def backward(g):
            _accum(a, g @ b.value.T)
            _accum(b, a.value.T @ g)

        return self._push(out, backward)

    def add(self, a: Var, b: Var) -> Var:
        out = Var(a.value + b.value)

        def backward(g):
            _accum(a, _unbroadcast(g, a.value.shape))
            _accum(b, _unbroadcast(g, b.value.shape))

        return self._push(out, backward)

    def sub(self, a: Var, b: Var) -> Var:
        out = Var(a.value - b.value)

        def backward(g):
            _accum(a, _unbroadcast(g, a.value.shape))
            _accum(b, _unbroadcast(-g, b.value.shape))

        return self._push(out, backward)

    def mul(self, a: Var, b: Var) -> Var:
        out = Var(a.value * b.value)

        def backward(g):
            _accum(a, _unbroadcast(g * b.value, a.value.shape))
            _accum(b, _unbroadcast(g * a.value, b.value.shape))

        return self._push(out, backward)

    def scale(self, a: Var, c: float) -> Var:
        out = Var(a.value * c)

        def backward(g):
            _accum(a, g * c)

        return self._push(out, backward)

    def add_scalar(self, a: Var, c: float) -> Var:
        out = Var(a.value + c)

        def backward(g):
            _accum(a, g)

        return self._push(out, backward)

    def neg(self, a: Var) -> Var:
        return self.scale(a, -1.0)

    def relu(self, a: Var) -> Var:
        mask = a.value > 0.0
        out = Var(np.where(mask, a.value, 0.0))

        def backward(g):
            _accum(a, g * mask)

        return self._push(out, backward)

    def tanh(self, a: Var) -> Var:
        t = np.tanh(a.value)
        out = Var(t)

        def backward(g):
            _accum(a, g * (1.0 - t * t))

        return self._push(out, backward)

    def sigmoid(self, a: Var) -> Var:
        s = 1.0 / (1.0 + np.exp(-a.value))
        out = Var(s)

        def backward(g):
            _accum(a, g * s * (1.0 - s))

        return self._push(out, backward)

    def exp(self, a: Var) -> Var:
        e = np.exp(a.value)
        out = Var(e)

        def backward(g):
            _accum(a, g * e)

        return self._push(out, backward)

    def square(self, a: Var) -> Var:
        out = Var(a.value * a.value)

        def backward(g):
            _accum(a, g * 2.0 * a.value)

        return self._push(out, backward)

    def clip(self, a: Var, lo: float, hi: float) -> Var:
        """Clamp with zero gradient outside [lo, hi]."""
        out = Var(np.clip(a.value, lo, hi))
        mask = (a.value >= lo) & (a.value <= hi)

        def backward(g):
            _accum(a, g * mask)

        return self._push(out, backward)

    def sum(self, a: Var, axis=None, keepdims: bool = False) -> Var:
        out = Var(a.value.sum(axis=axis, keepdims=keepdims))

        def backward(g):
            if axis is None:
                _accum(a, np.broadcast_to(g, a.value.shape).copy())
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                _accum(a, np.broadcast_to(gg, a.value.shape).copy())

        return self._push(out, backward)

    def mean(self, a: Var, axis=None, keepdims: bool = False) -> Var:
        n = a.value.size if axis is None else a.value.shape[axis]
        return self.scale(self.sum(a, axis=axis, keepdims=keepdims), 1.0 / n)

    def concat(self, parts: list, axis: int = -1) -> Var:
        out = Var(np.concatenate([p.value for p in parts], axis=axis))
        axis = axis if axis >= 0 else out.value.ndim + axis
        sizes = [p.value.shape[axis] for p in parts]
        offsets = np.cumsum([0] + sizes)

        def backward(g):
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                _accum(p, g[tuple(sl)])

        return self._push(out, backward)

    def reshape(self, a: Var, shape) -> Var:
        out = Var(a.value.reshape(shape))

        def backward(g):
            _accum(a, g.reshape(a.value.shape))

        return self._push(out, backward)

    def logsumexp(self, a: Var) -> Var:
        """Logsumexp over the last axis, max-shifted for stability."""
        m = a.value.max(axis=-1, keepdims=True)
        e = np.exp(a.value - m)
        s = e.sum(axis=-1, keepdims=True)
        out = Var((np.log(s) + m).squeeze(-1))
        soft = e / s

        def backward(g):
            _accum(a, g[..., None] * soft)

        return self._push(out, backward)

    def take_per_row(self, a: Var, idx: np.ndarray) -> Var:
        """out[i] = a[i, idx[i]] for a 2-D input."""
        rows = np.arange(a.value.shape[0])
        out = Var(a.value[rows, idx])

        def backward(g):
            ga = np.zeros_like(a.value)
            np.add.at(ga, (rows, idx), g)
            _accum(a, ga)

        return self._push(out, backward)

    # ---- reverse sweep -----------------------------------------------------

    def backward(self, loss: Var) -> None:
        """Seed d(loss)=1 and accumulate gradients into wrapped Params."""
        loss.grad = np.ones_like(loss.value)
        for out, fn in reversed(self._nodes):
            if out.grad is not None:
                fn(out.grad)
        for p, var in self._param_vars.values():
            if var.grad is not None:
                p.grad += var.grad
