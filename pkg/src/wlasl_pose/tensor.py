"""Reverse-mode automatic differentiation over float64 numpy arrays.

Every operation returns a new :class:`Value` that remembers its inputs and a
backward rule. Calling :func:`backward` on a scalar loss records the graph into
a :class:`Tape` (topological order) and walks it once in reverse, accumulating
gradients into every value that requires them.

The graph is rebuilt on each forward pass, so sequence lengths may vary freely
between calls.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "ShapeError",
    "Value",
    "Tape",
    "as_value",
    "matmul",
    "add",
    "sub",
    "mul",
    "neg",
    "tanh",
    "sigmoid",
    "mean_over_axis",
    "sum_all",
    "reshape",
    "stack",
    "take",
    "softmax",
    "softmax_cross_entropy",
    "backward",
    "zero_grads",
]

DTYPE = np.float64


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class Value:
    """A dense float64 array that can take part in differentiation.

    ``data`` is read-only once constructed; only ``grad`` changes, and only
    through :func:`backward` and :meth:`zero_grad`.
    """

    __slots__ = ("_data", "requires_grad", "grad", "_parents", "_backward", "op")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        _parents: tuple["Value", ...] = (),
        _backward: Callable[[np.ndarray], None] | None = None,
        op: str = "leaf",
        _copy: bool = True,
    ):
        arr = np.array(data, dtype=DTYPE) if _copy else data
        if arr.ndim == 0:
            arr = arr.reshape(1)
        arr.flags.writeable = False
        self._data = arr
        self.requires_grad = requires_grad
        # interior nodes get a gradient buffer lazily during backward
        self.grad: np.ndarray | None = np.zeros_like(arr) if requires_grad and not _parents else None
        self._parents = _parents
        self._backward = _backward
        self.op = op

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def size(self) -> int:
        return self._data.size

    @property
    def ndim(self) -> int:
        return self._data.ndim

    def numpy(self) -> np.ndarray:
        return self._data.copy()

    def item(self) -> float:
        if self._data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self._data.reshape(-1)[0])

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self._data)

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        return f"Value(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self) -> "Value":
        return sum_all(self)

    def mean(self, axis: int) -> "Value":
        return mean_over_axis(self, axis)

    def reshape(self, *shape) -> "Value":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def __getitem__(self, index: int) -> "Value":
        return take(self, index)


def as_value(x) -> Value:
    return x if isinstance(x, Value) else Value(x)


def _needs_grad(*values: Value) -> bool:
    return any(v.requires_grad for v in values)


def _make(data: np.ndarray, parents: tuple[Value, ...], rule, op: str) -> Value:
    data = np.asarray(data, dtype=DTYPE)
    if not _needs_grad(*parents):
        return Value(data, op=op, _copy=False)
    return Value(data, requires_grad=True, _parents=parents, _backward=rule, op=op, _copy=False)


def _accumulate(v: Value, g: np.ndarray) -> None:
    if not v.requires_grad:
        return
    if v.grad is None:
        v.grad = np.array(g, dtype=DTYPE)  # copy: g may be a view or shared
    else:
        v.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape`` after numpy-style broadcasting."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(a: Value, b: Value, op: str) -> tuple[int, ...]:
    if a.shape == b.shape:
        return a.shape
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast shapes {a.shape} and {b.shape}") from None


# ---------------------------------------------------------------- elementwise


def add(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    _broadcast_shape(a, b, "add")
    out_data = a.data + b.data

    def rule(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(g, b.shape))

    return _make(out_data, (a, b), rule, "add")


def sub(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    _broadcast_shape(a, b, "sub")
    out_data = a.data - b.data

    def rule(g):
        _accumulate(a, _unbroadcast(g, a.shape))
        _accumulate(b, _unbroadcast(-g, b.shape))

    return _make(out_data, (a, b), rule, "sub")


def mul(a, b) -> Value:
    a, b = as_value(a), as_value(b)
    _broadcast_shape(a, b, "mul")
    out_data = a.data * b.data

    def rule(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.shape))

    return _make(out_data, (a, b), rule, "mul")


def neg(a) -> Value:
    a = as_value(a)

    def rule(g):
        _accumulate(a, -g)

    return _make(-a.data, (a,), rule, "neg")


def tanh(x) -> Value:
    x = as_value(x)
    y = np.tanh(x.data)

    def rule(g):
        _accumulate(x, g * (1.0 - y * y))

    return _make(y, (x,), rule, "tanh")


def sigmoid(x) -> Value:
    x = as_value(x)
    y = 0.5 * (1.0 + np.tanh(0.5 * x.data))  # overflow-free form of 1 / (1 + exp(-x))

    def rule(g):
        _accumulate(x, g * y * (1.0 - y))

    return _make(y, (x,), rule, "sigmoid")


# ---------------------------------------------------------------- linear algebra


def matmul(a, b) -> Value:
    """Matrix product of the last two axes; leading axes broadcast."""
    a, b = as_value(a), as_value(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} @ {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError(f"matmul batch dimensions disagree: {a.shape} @ {b.shape}") from None
    out_data = a.data @ b.data

    def rule(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape))

    return _make(out_data, (a, b), rule, "matmul")


# ---------------------------------------------------------------- reductions and reshaping


def mean_over_axis(x, axis: int) -> Value:
    x = as_value(x)
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"axis {axis} out of range for shape {x.shape}")
    axis = axis % x.ndim
    extent = x.shape[axis]
    out_data = x.data.mean(axis=axis)
    if out_data.ndim == 0:
        out_data = out_data.reshape(1)

    def rule(g):
        g = g.reshape(x.shape[:axis] + (1,) + x.shape[axis + 1 :])
        _accumulate(x, np.broadcast_to(g / extent, x.shape))

    return _make(out_data, (x,), rule, "mean")


def sum_all(x) -> Value:
    x = as_value(x)

    def rule(g):
        _accumulate(x, np.broadcast_to(g.reshape(()), x.shape))

    return _make(np.array([x.data.sum()]), (x,), rule, "sum")


def reshape(x, shape: Sequence[int]) -> Value:
    x = as_value(x)
    shape = tuple(int(s) for s in shape)
    try:
        out_data = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"cannot reshape {x.shape} into {shape}") from None

    def rule(g):
        _accumulate(x, g.reshape(x.shape))

    return _make(out_data, (x,), rule, "reshape")


def stack(values: Sequence[Value], axis: int = 0) -> Value:
    values = [as_value(v) for v in values]
    if not values:
        raise ShapeError("stack needs at least one value")
    shapes = {v.shape for v in values}
    if len(shapes) != 1:
        raise ShapeError(f"stack needs equal shapes, got {sorted(shapes)}")
    out_data = np.stack([v.data for v in values], axis=axis)

    def rule(g):
        for i, v in enumerate(values):
            if v.requires_grad:
                _accumulate(v, np.take(g, i, axis=axis))

    return _make(out_data, tuple(values), rule, "stack")


def take(x, index: int, axis: int = 0) -> Value:
    """Select one slice along ``axis``, removing that axis."""
    x = as_value(x)
    if x.ndim < 2:
        raise ShapeError(f"take needs rank >= 2, got shape {x.shape}")
    axis = axis % x.ndim
    if not -x.shape[axis] <= index < x.shape[axis]:
        raise ShapeError(f"index {index} out of range for axis {axis} of {x.shape}")
    out_data = np.take(x.data, index, axis=axis)

    def rule(g):
        full = np.zeros_like(x.data)
        sl = [slice(None)] * x.ndim
        sl[axis] = index
        full[tuple(sl)] = g
        _accumulate(x, full)

    return _make(out_data, (x,), rule, "take")


# ---------------------------------------------------------------- classification loss


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of a plain array, max-subtracted."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels: Sequence[int] | np.ndarray) -> Value:
    """Mean over the batch of ``-log softmax(logits)[label]``."""
    logits = as_value(logits)
    if logits.ndim != 2:
        raise ShapeError(f"logits must be batch x classes, got {logits.shape}")
    batch, classes = logits.shape
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != batch:
        raise ShapeError(f"{labels.shape[0]} labels for a batch of {batch}")
    if np.any(labels < 0) or np.any(labels >= classes):
        bad = labels[(labels < 0) | (labels >= classes)][0]
        raise ValueError(f"label {bad} out of range for {classes} classes")

    z = logits.data - logits.data.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(batch)
    loss = float(np.mean(log_norm - z[rows, labels]))
    probs = np.exp(z - log_norm[:, None])

    def rule(g):
        d = probs.copy()
        d[rows, labels] -= 1.0
        _accumulate(logits, g.reshape(()) * d / batch)

    return _make(np.array([loss]), (logits,), rule, "softmax_xent")


# ---------------------------------------------------------------- tape and backward


class Tape:
    """Operations reachable from a root, inputs before consumers."""

    def __init__(self, nodes: list[Value]):
        self.nodes = nodes

    @classmethod
    def record(cls, root: Value) -> "Tape":
        order: list[Value] = []
        seen: set[int] = set()
        stack_: list[tuple[Value, bool]] = [(root, False)]
        # iterative post-order; recursion would overflow on long GRU chains
        while stack_:
            node, expanded = stack_.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack_.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p.requires_grad:
                    stack_.append((p, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


def backward(loss: Value) -> Tape:
    """Accumulate d(loss)/d(value) into every reachable value that requires it.

    Interior gradients are scratch buffers and are reset on every call; leaf
    gradients accumulate until :func:`zero_grads`.
    """
    if loss.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ValueError("loss does not depend on any value that requires grad")
    tape = Tape.record(loss)
    for node in tape:
        if node._parents:
            node.grad = None
    _accumulate(loss, np.ones_like(loss.data))
    for node in reversed(tape.nodes):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    return tape


def zero_grads(values: Iterable[Value]) -> None:
    for v in values:
        v.zero_grad()
