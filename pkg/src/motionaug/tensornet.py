"""Small define-by-run reverse-mode autodiff over float64 numpy arrays.

Only the primitives the motion VAE needs are provided. Tensors are 1-D or
2-D; binary ops broadcast numpy-style and gradients are summed back to the
operand shapes.
"""
from __future__ import annotations

import json
import math
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEBUG_NAN = os.environ.get("MOTIONAUG_DEBUG_NAN") == "1"
WEIGHTS_FORMAT = "motionaug-weights"
WEIGHTS_VERSION = 1


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, value, requires_grad: bool = False, parents=(), backward=None, name: str | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        if self.value.ndim > 2:
            raise ShapeError(f"tensors are at most 2-D, got shape {self.value.shape}")
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self.name = name
        if DEBUG_NAN and not np.all(np.isfinite(self.value)):
            raise FloatingPointError(f"non-finite values produced ({name or 'intermediate'})")

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.value)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return mul_scalar(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul_scalar(self, -1.0)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _needs(*ts) -> bool:
    return any(t.requires_grad for t in ts)


def _make(value, parents, backward) -> Tensor:
    parents = tuple(parents)
    track = _needs(*parents)
    return Tensor(value, requires_grad=track, parents=parents if track else (), backward=backward if track else None)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _check_broadcast(a: Tensor, b: Tensor):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(f"incompatible shapes {a.shape} and {b.shape}") from exc


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b)
    return _make(a.value + b.value, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b)
    return _make(a.value - b.value, (a, b), lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b)
    av, bv = a.value, b.value
    return _make(av * bv, (a, b), lambda g: (_unbroadcast(g * bv, a.shape), _unbroadcast(g * av, b.shape)))


def mul_scalar(a, s: float) -> Tensor:
    a = as_tensor(a)
    s = float(s)
    return _make(a.value * s, (a,), lambda g: (g * s,))


def affine(x, W, b) -> Tensor:
    """``x @ W + b`` with x (n_in,) or (batch, n_in), W (n_in, n_out), b (n_out,)."""
    x, W, b = as_tensor(x), as_tensor(W), as_tensor(b)
    if W.value.ndim != 2 or x.shape[-1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeError(f"affine: x {x.shape}, W {W.shape}, b {b.shape}")
    xv, Wv = x.value, W.value

    def back(g):
        if xv.ndim == 1:
            gW = np.outer(xv, g)
            gb = g
        else:
            gW = xv.T @ g
            gb = g.sum(axis=0)
        return g @ Wv.T, gW, gb

    return _make(xv @ Wv + b.value, (x, W, b), back)


def elu(x) -> Tensor:
    x = as_tensor(x)
    xv = x.value
    neg = np.expm1(np.minimum(xv, 0.0))
    out = np.where(xv > 0, xv, neg)
    return _make(out, (x,), lambda g: (g * np.where(xv > 0, 1.0, neg + 1.0),))


def exp(x) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.value)
    return _make(out, (x,), lambda g: (g * out,))


def log(x) -> Tensor:
    x = as_tensor(x)
    xv = x.value
    return _make(np.log(xv), (x,), lambda g: (g / xv,))


def square(x) -> Tensor:
    x = as_tensor(x)
    xv = x.value
    return _make(xv * xv, (x,), lambda g: (2.0 * g * xv,))


def clip(x, lo: float, hi: float) -> Tensor:
    """Clamp values; the gradient is zero where the clamp is active."""
    x = as_tensor(x)
    xv = x.value
    inside = (xv >= lo) & (xv <= hi)
    return _make(np.clip(xv, lo, hi), (x,), lambda g: (g * inside,))


def softmax(x) -> Tensor:
    """Softmax along the last axis."""
    x = as_tensor(x)
    z = x.value - x.value.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)
    return _make(s, (x,), lambda g: (s * (g - (g * s).sum(axis=-1, keepdims=True)),))


def concat(a, b) -> Tensor:
    """Concatenate along the last axis."""
    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim != b.value.ndim or a.shape[:-1] != b.shape[:-1]:
        raise ShapeError(f"concat: incompatible shapes {a.shape} and {b.shape}")
    n = a.shape[-1]
    return _make(np.concatenate([a.value, b.value], axis=-1), (a, b), lambda g: (g[..., :n], g[..., n:]))


def columns(x, start: int, stop: int) -> Tensor:
    """Slice ``x[..., start:stop]``."""
    x = as_tensor(x)
    shape = x.shape

    def back(g):
        out = np.zeros(shape)
        out[..., start:stop] = g
        return (out,)

    return _make(x.value[..., start:stop], (x,), back)


def total(x) -> Tensor:
    """Sum of all entries (scalar)."""
    x = as_tensor(x)
    shape = x.shape
    return _make(np.array(x.value.sum()), (x,), lambda g: (np.full(shape, float(g)),))


def mean(x) -> Tensor:
    x = as_tensor(x)
    return mul_scalar(total(x), 1.0 / x.value.size)


def _topological(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Reverse sweep from a scalar loss.

    Leaf tensors with ``requires_grad`` accumulate into ``.grad`` (call
    :meth:`ParamStore.zero_grad` between steps).
    """
    if loss.value.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    grads = {id(loss): np.ones_like(loss.value)}
    for node in reversed(_topological(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = pg if key not in grads else grads[key] + pg


class ParamStore:
    """Named parameters in insertion order."""

    def __init__(self):
        self._params: OrderedDict[str, Tensor] = OrderedDict()

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter name '{name}'")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params.items())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def count(self) -> int:
        return int(sum(t.value.size for t in self._params.values()))

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def flat(self) -> np.ndarray:
        return np.concatenate([t.value.ravel() for t in self._params.values()])

    def set_flat(self, vec) -> None:
        vec = np.asarray(vec, dtype=np.float64)
        i = 0
        for t in self._params.values():
            n = t.value.size
            t.value = vec[i:i + n].reshape(t.value.shape).copy()
            i += n

    def flat_grad(self) -> np.ndarray:
        return np.concatenate([
            (t.grad if t.grad is not None else np.zeros_like(t.value)).ravel() for t in self._params.values()
        ])


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox): streams are reproducible per seed."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: ParamStore, state: AdamState, lr: float, grads: dict | None = None) -> None:
    """One bias-corrected Adam update, in place.

    Gradients come from ``grads[name]`` when given, otherwise ``param.grad``.
    Parameters without a gradient are treated as having zero gradient.
    """
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, p in params:
        g = grads.get(name) if grads is not None else p.grad
        if g is None:
            g = np.zeros_like(p.value)
        if g.shape != p.value.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter '{name}' {p.value.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.value)
            state.v[name] = np.zeros_like(p.value)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.value = p.value - lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def grad_check(f, x, h: float = 1e-6) -> float:
    """Compare reverse-mode and central-difference gradients of ``f`` at ``x``.

    ``f`` maps a :class:`Tensor` to a scalar Tensor. Returns
    ``max|g_ad - g_fd| / max(max|g_ad|, max|g_fd|)`` (0 when both vanish).
    """
    x = np.array(x, dtype=np.float64)
    xt = Tensor(x.copy(), requires_grad=True)
    backward(f(xt))
    analytic = xt.grad if xt.grad is not None else np.zeros_like(x)
    numeric = np.zeros_like(x)
    flat = x.reshape(-1)
    num_flat = numeric.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = float(f(Tensor(x.copy())).value)
        flat[i] = old - h
        fm = float(f(Tensor(x.copy())).value)
        flat[i] = old
        num_flat[i] = (fp - fm) / (2.0 * h)
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.abs(analytic - numeric).max() / scale)


def params_to_dict(params: ParamStore, meta: dict | None = None) -> dict:
    return {
        "format": WEIGHTS_FORMAT,
        "version": WEIGHTS_VERSION,
        "param_count": params.count(),
        "meta": meta or {},
        "params": [
            {"name": name, "shape": list(t.value.shape), "data": t.value.ravel().tolist()} for name, t in params
        ],
    }


class WeightsFormatError(ValueError):
    pass


def params_from_dict(data: dict) -> tuple[ParamStore, dict]:
    if not isinstance(data, dict) or data.get("format") != WEIGHTS_FORMAT:
        raise WeightsFormatError("not a motionaug weights file")
    if data.get("version") != WEIGHTS_VERSION:
        raise WeightsFormatError(f"unsupported weights version {data.get('version')!r} (expected {WEIGHTS_VERSION})")
    store = ParamStore()
    try:
        for entry in data["params"]:
            shape = tuple(int(s) for s in entry["shape"])
            arr = np.asarray(entry["data"], dtype=np.float64)
            if arr.size != int(np.prod(shape)):
                raise WeightsFormatError(f"parameter '{entry['name']}': {arr.size} values for shape {shape}")
            store.add(entry["name"], arr.reshape(shape))
    except (KeyError, TypeError) as exc:
        raise WeightsFormatError(f"corrupt weights file: {exc}") from exc
    if store.count() != data.get("param_count"):
        raise WeightsFormatError(f"parameter count {store.count()} does not match header {data.get('param_count')}")
    return store, data.get("meta", {})


def save_params(params: ParamStore, path, meta: dict | None = None) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(params_to_dict(params, meta), separators=(",", ":")))


def load_params(path) -> tuple[ParamStore, dict]:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise WeightsFormatError(f"corrupt weights file: {exc}") from exc
    return params_from_dict(data)
