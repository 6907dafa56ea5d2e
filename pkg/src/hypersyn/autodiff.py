"""Minimal dense-tensor engine with reverse-mode differentiation.

Tensors wrap float64 numpy arrays. Every operation that touches a tensor
requiring gradients records its parents and a vector-Jacobian closure, so
the computation graph doubles as the gradient tape. ``backward`` walks the
graph once, in reverse topological order, accumulating gradients into the
leaves.

The module-level functions (``tanh``, ``sum``, ``clip``, ...) accept both
``Tensor`` and plain numpy inputs and dispatch accordingly; this lets the
geometry code run identically on raw arrays and on the gradient tape.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

Array = np.ndarray


def _as_array(value) -> Array:
    return np.asarray(value, dtype=np.float64)


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A float64 array participating in reverse-mode differentiation."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    # Make numpy defer to the reflected Tensor operators instead of trying
    # to coerce a Tensor operand elementwise.
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_array(data)
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._vjp = None

    # -- introspection -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({self.data!r}{flag})"

    # -- graph plumbing --------------------------------------------------

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Populate ``grad`` on every reachable tensor requiring gradients.

        The loss must be scalar. Nodes are visited in reverse topological
        order exactly once; traversal is iterative so deep op chains (long
        recurrences) do not hit the interpreter recursion limit.
        """
        if self.data.size != 1:
            raise ValueError("backward requires a scalar loss")
        order = topological_order(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._vjp is None:
                continue
            grads = node._vjp(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    # take the array as-is; accumulation below never mutates
                    parent.grad = g
                else:
                    parent.grad = parent.grad + g

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(other, -1.0) if isinstance(other, Tensor) else -_as_array(other))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)


def _lift(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data: Array, parents: Sequence[Tensor], vjp) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def topological_order(root: Tensor) -> list[Tensor]:
    """All graph nodes reachable from ``root``, parents before children."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


class GradientTape:
    """Read-only view of the op records reachable from a root tensor."""

    def __init__(self, root: Tensor):
        self.root = root
        self.nodes = topological_order(root)

    def backward(self) -> None:
        self.root.backward()


# -- elementwise primitives -------------------------------------------------


def add(a, b):
    if not (isinstance(a, Tensor) or isinstance(b, Tensor)):
        return _as_array(a) + _as_array(b)
    a, b = _lift(a), _lift(b)
    out = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(out, (a, b), vjp)


def mul(a, b):
    if not (isinstance(a, Tensor) or isinstance(b, Tensor)):
        return _as_array(a) * _as_array(b)
    a, b = _lift(a), _lift(b)
    out = a.data * b.data

    def vjp(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _make(out, (a, b), vjp)


def div(a, b):
    if not (isinstance(a, Tensor) or isinstance(b, Tensor)):
        return _as_array(a) / _as_array(b)
    a, b = _lift(a), _lift(b)
    out = a.data / b.data

    def vjp(g):
        return (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
        )

    return _make(out, (a, b), vjp)


def power(a, exponent: float):
    if not isinstance(a, Tensor):
        return _as_array(a) ** exponent
    out = a.data**exponent

    def vjp(g):
        return (g * exponent * a.data ** (exponent - 1.0),)

    return _make(out, (a,), vjp)


def sqrt(a):
    if not isinstance(a, Tensor):
        return np.sqrt(_as_array(a))
    out = np.sqrt(a.data)

    def vjp(g):
        return (g * 0.5 / out,)

    return _make(out, (a,), vjp)


def exp(a):
    if not isinstance(a, Tensor):
        return np.exp(_as_array(a))
    out = np.exp(a.data)

    def vjp(g):
        return (g * out,)

    return _make(out, (a,), vjp)


def log(a):
    if not isinstance(a, Tensor):
        return np.log(_as_array(a))
    out = np.log(a.data)

    def vjp(g):
        return (g / a.data,)

    return _make(out, (a,), vjp)


def tanh(a):
    if not isinstance(a, Tensor):
        return np.tanh(_as_array(a))
    out = np.tanh(a.data)

    def vjp(g):
        return (g * (1.0 - out * out),)

    return _make(out, (a,), vjp)


def atanh(a):
    if not isinstance(a, Tensor):
        return np.arctanh(_as_array(a))
    out = np.arctanh(a.data)

    def vjp(g):
        return (g / (1.0 - a.data * a.data),)

    return _make(out, (a,), vjp)


def sigmoid(a):
    if not isinstance(a, Tensor):
        return expit(_as_array(a))
    out = expit(a.data)

    def vjp(g):
        return (g * out * (1.0 - out),)

    return _make(out, (a,), vjp)


def clip(a, lo=None, hi=None):
    """Clamp values; gradient passes through the unclipped region only."""
    if not isinstance(a, Tensor):
        return np.clip(_as_array(a), lo, hi)
    out = np.clip(a.data, lo, hi)
    inside = np.ones_like(a.data)
    if lo is not None:
        inside = inside * (a.data >= lo)
    if hi is not None:
        inside = inside * (a.data <= hi)

    def vjp(g):
        return (g * inside,)

    return _make(out, (a,), vjp)


def relu(a):
    return clip(a, 0.0, None)


# -- reductions --------------------------------------------------------------


def sum(a, axis=None, keepdims: bool = False):  # noqa: A001 - mirrors numpy
    if not isinstance(a, Tensor):
        return _as_array(a).sum(axis=axis, keepdims=keepdims)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            axes = axis if isinstance(axis, tuple) else (axis,)
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.data.shape).copy(),)

    return _make(out, (a,), vjp)


def mean(a, axis=None, keepdims: bool = False):
    if not isinstance(a, Tensor):
        return _as_array(a).mean(axis=axis, keepdims=keepdims)
    if axis is None:
        count = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = 1
        for ax in axes:
            count *= a.data.shape[ax]
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def norm(a, axis=-1, keepdims: bool = False, floor: float = 0.0):
    """Euclidean norm along ``axis``; ``floor`` clamps the squared norm."""
    sq = sum(mul(a, a), axis=axis, keepdims=keepdims)
    if floor > 0.0:
        sq = clip(sq, floor * floor, None)
    return sqrt(sq)


def softmax(a, axis=-1):
    data = a.data if isinstance(a, Tensor) else _as_array(a)
    shift = data.max(axis=axis, keepdims=True)
    e = exp(add(a, -shift))
    return div(e, sum(e, axis=axis, keepdims=True))


# -- shape and structure ------------------------------------------------------


def matmul(a, b):
    if not (isinstance(a, Tensor) or isinstance(b, Tensor)):
        return _as_array(a) @ _as_array(b)
    a, b = _lift(a), _lift(b)
    out = a.data @ b.data

    def vjp(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape)

    return _make(out, (a, b), vjp)


def transpose(a):
    if not isinstance(a, Tensor):
        return np.swapaxes(_as_array(a), -1, -2)
    out = np.swapaxes(a.data, -1, -2)

    def vjp(g):
        return (np.swapaxes(g, -1, -2),)

    return _make(out, (a,), vjp)


def reshape(a, shape):
    if not isinstance(a, Tensor):
        return _as_array(a).reshape(shape)
    out = a.data.reshape(shape)

    def vjp(g):
        return (g.reshape(a.data.shape),)

    return _make(out, (a,), vjp)


def getitem(a, index):
    if not isinstance(a, Tensor):
        return _as_array(a)[index]
    out = a.data[index]

    def vjp(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return _make(out, (a,), vjp)


def take(a, indices, axis: int = 0):
    """Gather rows by integer index; backward scatter-adds."""
    indices = np.asarray(indices)
    if not isinstance(a, Tensor):
        return np.take(_as_array(a), indices, axis=axis)
    if axis != 0:
        raise NotImplementedError("take only supports axis=0")
    out = np.take(a.data, indices, axis=0)

    def vjp(g):
        full = np.zeros_like(a.data)
        np.add.at(full, indices, g)
        return (full,)

    return _make(out, (a,), vjp)


def concat(parts: Iterable, axis: int = -1):
    parts = list(parts)
    if not any(isinstance(p, Tensor) for p in parts):
        return np.concatenate([_as_array(p) for p in parts], axis=axis)
    parts = [_lift(p) for p in parts]
    out = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]

    def vjp(g):
        splits = np.cumsum(sizes)[:-1]
        return tuple(np.split(g, splits, axis=axis))

    return _make(out, tuple(parts), vjp)


def stack(parts: Iterable, axis: int = 0):
    parts = list(parts)
    if not any(isinstance(p, Tensor) for p in parts):
        return np.stack([_as_array(p) for p in parts], axis=axis)
    parts = [_lift(p) for p in parts]
    out = np.stack([p.data for p in parts], axis=axis)

    def vjp(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(parts)))

    return _make(out, tuple(parts), vjp)


def value_of(a) -> Array:
    """The raw numpy value of a tensor or array, outside the graph."""
    return a.data if isinstance(a, Tensor) else _as_array(a)


def dropout(a, rate: float, rng: np.random.Generator, training: bool):
    """Inverted dropout with a tape-constant mask; identity when not training."""
    if not training or rate <= 0.0:
        return a
    shape = a.data.shape if isinstance(a, Tensor) else _as_array(a).shape
    mask = (rng.random(shape) >= rate) / (1.0 - rate)
    return mul(a, mask)
