"""Layer vocabulary for the pose models.

Parameters live in plain ``dict[str, np.ndarray]`` stores keyed by dotted
names. A forward pass wraps them in :class:`~wlasl_pose.tensor.Value` leaves,
so each pass gets a fresh graph and the optimizer can work on raw arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .tensor import ShapeError, Value, add, matmul, mul, sigmoid, sub, take, tanh


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return math.sqrt(6.0 / (fan_in + fan_out))


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    b = glorot_bound(fan_in, fan_out)
    return rng.uniform(-b, b, size=(fan_in, fan_out))


def uniform_adjacency(vertices: int) -> np.ndarray:
    """Fully connected graph where every vertex starts attending uniformly."""
    return np.full((vertices, vertices), 1.0 / vertices)


# ---------------------------------------------------------------- graph convolution


@dataclass
class GraphConvLayer:
    """``tanh(A @ H @ W)`` with a trainable K x K adjacency ``A``."""

    adjacency: Value
    weight: Value

    @property
    def vertices(self) -> int:
        return self.adjacency.shape[0]

    @property
    def in_width(self) -> int:
        return self.weight.shape[0]

    @property
    def out_width(self) -> int:
        return self.weight.shape[1]


def init_graph_conv(rng: np.random.Generator, vertices: int, in_width: int, out_width: int, prefix: str) -> dict[str, np.ndarray]:
    return {
        f"{prefix}.A": uniform_adjacency(vertices),
        f"{prefix}.W": glorot_uniform(rng, in_width, out_width),
    }


def graph_conv_forward(layer: GraphConvLayer, h: Value) -> Value:
    """Apply one graph convolution to ``h`` of shape ``[..., K, F]``."""
    k, f = h.shape[-2], h.shape[-1]
    if layer.adjacency.shape != (layer.vertices, layer.vertices):
        raise ShapeError(f"adjacency must be square, got {layer.adjacency.shape}")
    if k != layer.vertices or f != layer.in_width:
        raise ShapeError(
            f"graph conv expects [..., {layer.vertices}, {layer.in_width}] features, got {h.shape}"
        )
    return tanh(matmul(matmul(layer.adjacency, h), layer.weight))


@dataclass
class ResidualGCBlock:
    first: GraphConvLayer
    second: GraphConvLayer
    skip: Value | None = None  # F x F' projection, only when widths differ

    @property
    def in_width(self) -> int:
        return self.first.in_width

    @property
    def out_width(self) -> int:
        return self.second.out_width


def init_residual_block(rng: np.random.Generator, vertices: int, in_width: int, out_width: int, prefix: str) -> dict[str, np.ndarray]:
    params = init_graph_conv(rng, vertices, in_width, out_width, f"{prefix}.first")
    params.update(init_graph_conv(rng, vertices, out_width, out_width, f"{prefix}.second"))
    if in_width != out_width:
        params[f"{prefix}.skip"] = glorot_uniform(rng, in_width, out_width)
    return params


def bind_residual_block(leaves: Mapping[str, Value], prefix: str) -> ResidualGCBlock:
    return ResidualGCBlock(
        first=GraphConvLayer(leaves[f"{prefix}.first.A"], leaves[f"{prefix}.first.W"]),
        second=GraphConvLayer(leaves[f"{prefix}.second.A"], leaves[f"{prefix}.second.W"]),
        skip=leaves.get(f"{prefix}.skip"),
    )


def residual_block_forward(block: ResidualGCBlock, h: Value) -> Value:
    if h.shape[-1] != block.in_width:
        raise ShapeError(f"block expects input width {block.in_width}, got shape {h.shape}")
    if block.first.out_width != block.second.in_width:
        raise ShapeError("block layers disagree on the hidden width")
    branch = graph_conv_forward(block.second, graph_conv_forward(block.first, h))
    if block.skip is None:
        if block.in_width != block.out_width:
            raise ShapeError(f"identity skip needs equal widths, got {block.in_width} -> {block.out_width}")
        shortcut = h
    else:
        shortcut = matmul(h, block.skip)
    return add(branch, shortcut)


# ---------------------------------------------------------------- GRU


@dataclass
class GruCell:
    """One GRU cell. Input weights are ``[D, H]``, recurrent ``[H, H]``, biases ``[H]``."""

    w_z: Value
    u_z: Value
    b_z: Value
    w_r: Value
    u_r: Value
    b_r: Value
    w_h: Value
    u_h: Value
    b_h: Value

    @property
    def input_width(self) -> int:
        return self.w_z.shape[0]

    @property
    def hidden_width(self) -> int:
        return self.u_z.shape[0]


_GATES = ("z", "r", "h")


def init_gru_cell(rng: np.random.Generator, input_width: int, hidden_width: int, prefix: str) -> dict[str, np.ndarray]:
    params = {}
    for g in _GATES:
        params[f"{prefix}.w_{g}"] = glorot_uniform(rng, input_width, hidden_width)
        params[f"{prefix}.u_{g}"] = glorot_uniform(rng, hidden_width, hidden_width)
        params[f"{prefix}.b_{g}"] = np.zeros(hidden_width)
    return params


def bind_gru_cell(leaves: Mapping[str, Value], prefix: str) -> GruCell:
    return GruCell(**{name: leaves[f"{prefix}.{name}"] for g in _GATES for name in (f"w_{g}", f"u_{g}", f"b_{g}")})


def gru_step(cell: GruCell, x: Value, h_prev: Value) -> Value:
    """Advance one time step.

    z = sigmoid(x W_z + h U_z + b_z)
    r = sigmoid(x W_r + h U_r + b_r)
    c = tanh(x W_h + (r * h) U_h + b_h)
    h' = (1 - z) * h + z * c

    ``x`` is ``[B, D]`` and ``h_prev`` is ``[B, H]``.
    """
    if x.ndim != 2 or x.shape[1] != cell.input_width:
        raise ShapeError(f"GRU input must be [batch, {cell.input_width}], got {x.shape}")
    if h_prev.shape != (x.shape[0], cell.hidden_width):
        raise ShapeError(f"GRU hidden state must be [{x.shape[0]}, {cell.hidden_width}], got {h_prev.shape}")
    z = sigmoid(add(add(matmul(x, cell.w_z), matmul(h_prev, cell.u_z)), cell.b_z))
    r = sigmoid(add(add(matmul(x, cell.w_r), matmul(h_prev, cell.u_r)), cell.b_r))
    cand = tanh(add(add(matmul(x, cell.w_h), matmul(mul(r, h_prev), cell.u_h)), cell.b_h))
    return add(mul(sub(1.0, z), h_prev), mul(z, cand))


def gru_sequence(cell: GruCell, xs: Value, h0: Value | None = None) -> list[Value]:
    """Run ``cell`` over ``xs`` (``[T, B, D]``), returning every hidden state.

    Same recurrence as :func:`gru_step`, but the input projections of all
    steps are computed in one matmul per gate.
    """
    if xs.ndim != 3 or xs.shape[2] != cell.input_width:
        raise ShapeError(f"GRU sequence must be [T, batch, {cell.input_width}], got {xs.shape}")
    t, b, _ = xs.shape
    h = h0 if h0 is not None else Value(np.zeros((b, cell.hidden_width)))
    px_z = add(matmul(xs, cell.w_z), cell.b_z)
    px_r = add(matmul(xs, cell.w_r), cell.b_r)
    px_h = add(matmul(xs, cell.w_h), cell.b_h)
    states = []
    for s in range(t):
        z = sigmoid(add(take(px_z, s), matmul(h, cell.u_z)))
        r = sigmoid(add(take(px_r, s), matmul(h, cell.u_r)))
        cand = tanh(add(take(px_h, s), matmul(mul(r, h), cell.u_h)))
        h = add(h, mul(z, sub(cand, h)))  # (1 - z) * h + z * cand
        states.append(h)
    return states


# ---------------------------------------------------------------- linear head


@dataclass
class LinearHead:
    weight: Value  # H x C
    bias: Value  # C

    @property
    def classes(self) -> int:
        return self.weight.shape[1]


def init_linear(rng: np.random.Generator, in_width: int, classes: int, prefix: str) -> dict[str, np.ndarray]:
    return {f"{prefix}.weight": glorot_uniform(rng, in_width, classes), f"{prefix}.bias": np.zeros(classes)}


def bind_linear(leaves: Mapping[str, Value], prefix: str) -> LinearHead:
    return LinearHead(leaves[f"{prefix}.weight"], leaves[f"{prefix}.bias"])


def linear_forward(head: LinearHead, x: Value) -> Value:
    if x.shape[-1] != head.weight.shape[0]:
        raise ShapeError(f"head expects width {head.weight.shape[0]}, got shape {x.shape}")
    return add(matmul(x, head.weight), head.bias)
