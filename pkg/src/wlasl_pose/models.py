"""Pose-TGCN and Pose-GRU sign classifiers.

Both models keep their parameters as a flat name -> array store. ``forward``
accepts either a single sequence or a batch of equal-length sequences.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import ClassVar, Mapping

import numpy as np

from . import layers
from .tensor import ShapeError, Value, mean_over_axis, reshape, softmax_cross_entropy, stack

KEYPOINTS = 55

# Pose-GRU hidden width per vocabulary tier
GRU_HIDDEN_BY_SUBSET = {100: 64, 300: 64, 1000: 128, 2000: 128}


def gru_hidden_for_classes(classes: int) -> int:
    """Hidden width of the subset tier nearest to ``classes`` (ties go to the smaller tier)."""
    tier = min(GRU_HIDDEN_BY_SUBSET, key=lambda s: (abs(s - classes), s))
    return GRU_HIDDEN_BY_SUBSET[tier]


@dataclass
class ModelOutput:
    pooled_logits: np.ndarray  # [C] or [B, C]
    per_step_logits: np.ndarray | None = None  # [T, C] or [B, T, C]


def rank_classes(logits: np.ndarray) -> list[int]:
    """Class indices by descending logit; equal logits keep ascending index order."""
    return np.argsort(-np.asarray(logits, dtype=np.float64), kind="stable").tolist()


def _check_params(params: dict[str, np.ndarray], expected: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    if set(params) != set(expected):
        raise ValueError(f"parameter names disagree with config: {sorted(set(params) ^ set(expected))}")
    out = {}
    for name, ref in expected.items():
        arr = np.asarray(params[name], dtype=np.float64)
        if arr.shape != ref.shape:
            raise ValueError(f"parameter {name} has shape {arr.shape}, config implies {ref.shape}")
        out[name] = arr
    return out


class PoseModel:
    kind: ClassVar[str]
    params: dict[str, np.ndarray]

    @property
    def classes(self) -> int:
        raise NotImplementedError

    def leaves(self, requires_grad: bool = True) -> dict[str, Value]:
        return {k: Value(v, requires_grad=requires_grad) for k, v in self.params.items()}

    def loss(self, leaves: Mapping[str, Value], batch: np.ndarray, labels) -> Value:
        raise NotImplementedError

    def logits(self, leaves: Mapping[str, Value], batch: np.ndarray):
        raise NotImplementedError

    def prepare(self, sequence: np.ndarray) -> np.ndarray:
        """Shape a full ``[T, K, 2]`` sequence for test-time prediction."""
        raise NotImplementedError

    def forward(self, sequence: np.ndarray) -> ModelOutput:
        raise NotImplementedError

    def predict(self, sequence: np.ndarray) -> list[int]:
        """Rank every class for one full-length ``[T, K, 2]`` coordinate sequence."""
        sequence = np.asarray(sequence, dtype=np.float64)
        if sequence.ndim != 3 or sequence.shape[0] == 0:
            raise ValueError("predict needs a non-empty [T, K, 2] sequence")
        return rank_classes(self.forward(self.prepare(sequence)).pooled_logits)

    def predict_batch_logits(self, batch: np.ndarray) -> np.ndarray:
        """Pooled logits ``[B, C]`` for prepared, equal-length sequences."""
        return self.logits(self.leaves(requires_grad=False), batch)[0].data.copy()

    def config_dict(self) -> dict:
        return asdict(self.config)


# ---------------------------------------------------------------- TGCN


@dataclass
class TgcnConfig:
    classes: int
    vertices: int = KEYPOINTS
    window_frames: int = 50
    block_count: int = 2
    hidden_widths: list[int] = field(default_factory=list)  # per block; empty means 2N everywhere

    def __post_init__(self):
        if not self.hidden_widths:
            self.hidden_widths = [2 * self.window_frames] * self.block_count
        self.hidden_widths = [int(w) for w in self.hidden_widths]
        if self.block_count < 1:
            raise ValueError("block_count must be >= 1")
        if len(self.hidden_widths) != self.block_count:
            raise ValueError(f"{self.block_count} blocks but {len(self.hidden_widths)} hidden widths")
        if self.hidden_widths[-1] % self.window_frames:
            raise ValueError(
                f"final width {self.hidden_widths[-1]} is not divisible by window_frames {self.window_frames}"
            )
        if self.classes < 1 or self.vertices < 1:
            raise ValueError("classes and vertices must be positive")

    @property
    def input_width(self) -> int:
        return 2 * self.window_frames

    @property
    def pooled_width(self) -> int:
        return self.vertices * self.hidden_widths[-1] // self.window_frames


def arrange_vertices(window: np.ndarray) -> np.ndarray:
    """``[..., N, K, 2]`` frames -> ``[..., K, 2N]`` with rows ``[x1, y1, ..., xN, yN]``."""
    window = np.asarray(window, dtype=np.float64)
    *lead, n, k, two = window.shape
    if two != 2:
        raise ShapeError(f"expected 2D coordinates in the last axis, got {window.shape}")
    return np.swapaxes(window, -3, -2).reshape(*lead, k, 2 * n)


def resample_frames(sequence: np.ndarray, frames: int) -> np.ndarray:
    """Linearly resample ``[T, ...]`` along time onto ``frames`` evenly spaced points."""
    sequence = np.asarray(sequence, dtype=np.float64)
    t = sequence.shape[0]
    if t == 0:
        raise ValueError("cannot resample an empty sequence")
    if t == frames:
        return sequence.copy()
    if t == 1:
        return np.repeat(sequence, frames, axis=0)
    pos = np.linspace(0.0, t - 1, frames)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, t - 1)
    w = (pos - lo).reshape(-1, *([1] * (sequence.ndim - 1)))
    return (1.0 - w) * sequence[lo] + w * sequence[hi]


class TgcnModel(PoseModel):
    kind = "tgcn"

    def __init__(self, config: TgcnConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = _check_params(params, self.init_params(config, seed=0))

    @staticmethod
    def init_params(config: TgcnConfig, seed: int) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        params = {}
        width = config.input_width
        for i, out in enumerate(config.hidden_widths):
            params.update(layers.init_residual_block(rng, config.vertices, width, out, f"blocks.{i}"))
            width = out
        params.update(layers.init_linear(rng, config.pooled_width, config.classes, "head"))
        return params

    @classmethod
    def create(cls, config: TgcnConfig, seed: int) -> "TgcnModel":
        return cls(config, cls.init_params(config, seed))

    @property
    def classes(self) -> int:
        return self.config.classes

    def features(self, leaves: Mapping[str, Value], x: np.ndarray | Value) -> Value:
        """Residual stack plus temporal pooling, ``[B, K, 2N] -> [B, K * F / N]``."""
        cfg = self.config
        h = x if isinstance(x, Value) else Value(x)
        if h.shape[-2:] != (cfg.vertices, cfg.input_width):
            raise ShapeError(f"TGCN expects [..., {cfg.vertices}, {cfg.input_width}] input, got {h.shape}")
        for i in range(cfg.block_count):
            h = layers.residual_block_forward(layers.bind_residual_block(leaves, f"blocks.{i}"), h)
        lead = h.shape[:-2]
        per_frame = cfg.hidden_widths[-1] // cfg.window_frames
        h = reshape(h, lead + (cfg.vertices, cfg.window_frames, per_frame))
        h = mean_over_axis(h, -2)
        return reshape(h, lead + (cfg.vertices * per_frame,))

    def logits(self, leaves: Mapping[str, Value], batch: np.ndarray):
        """``batch`` is ``[B, N, K, 2]``; returns pooled logits ``[B, C]`` and None."""
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 4 or batch.shape[1] != self.config.window_frames:
            raise ShapeError(
                f"TGCN expects [batch, {self.config.window_frames}, K, 2] windows, got {batch.shape}"
            )
        feats = self.features(leaves, arrange_vertices(batch))
        return layers.linear_forward(layers.bind_linear(leaves, "head"), feats), None

    def loss(self, leaves, batch, labels) -> Value:
        pooled, _ = self.logits(leaves, batch)
        return softmax_cross_entropy(pooled, labels)

    def forward(self, sequence: np.ndarray) -> ModelOutput:
        """Logits for one ``[N, K, 2]`` window."""
        sequence = np.asarray(sequence, dtype=np.float64)
        pooled, _ = self.logits(self.leaves(requires_grad=False), sequence[None])
        return ModelOutput(pooled.data[0].copy())

    def prepare(self, sequence: np.ndarray) -> np.ndarray:
        return resample_frames(sequence, self.config.window_frames)


# ---------------------------------------------------------------- GRU


@dataclass
class GruConfig:
    classes: int
    input_width: int = 2 * KEYPOINTS
    hidden_width: int = 0  # 0 picks the subset-tier width from ``classes``
    layer_count: int = 2

    def __post_init__(self):
        if self.layer_count != 2:
            raise ValueError("Pose-GRU uses exactly 2 stacked layers")
        if not self.hidden_width:
            self.hidden_width = gru_hidden_for_classes(self.classes)
        if self.hidden_width < 1 or self.classes < 1 or self.input_width < 1:
            raise ValueError("widths and class count must be positive")


class GruModel(PoseModel):
    kind = "gru"

    def __init__(self, config: GruConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = _check_params(params, self.init_params(config, seed=0))

    @staticmethod
    def init_params(config: GruConfig, seed: int) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        params = {}
        width = config.input_width
        for i in range(config.layer_count):
            params.update(layers.init_gru_cell(rng, width, config.hidden_width, f"gru.{i}"))
            width = config.hidden_width
        params.update(layers.init_linear(rng, config.hidden_width, config.classes, "head"))
        return params

    @classmethod
    def create(cls, config: GruConfig, seed: int) -> "GruModel":
        return cls(config, cls.init_params(config, seed))

    @property
    def classes(self) -> int:
        return self.config.classes

    def hidden_states(self, leaves: Mapping[str, Value], x: np.ndarray) -> list[Value]:
        """Top-layer hidden states, one ``[B, H]`` value per step of ``x`` (``[B, T, D]``)."""
        b, t, d = x.shape
        if t == 0:
            raise ValueError("GRU needs at least one time step")
        if d != self.config.input_width:
            raise ShapeError(f"GRU expects input width {self.config.input_width}, got {d}")
        cells = [layers.bind_gru_cell(leaves, f"gru.{i}") for i in range(self.config.layer_count)]
        xs = Value(np.swapaxes(x, 0, 1))  # [T, B, D]
        for cell in cells:
            states = layers.gru_sequence(cell, xs)
            xs = stack(states, axis=0)
        return states

    def logits(self, leaves: Mapping[str, Value], batch: np.ndarray):
        """``batch`` is ``[B, T, K, 2]`` or ``[B, T, 2K]``; returns (pooled ``[B, C]``, per-step list)."""
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim == 4:
            batch = batch.reshape(batch.shape[0], batch.shape[1], -1)
        if batch.ndim != 3:
            raise ShapeError(f"GRU expects [batch, T, 2K] input, got {batch.shape}")
        head = layers.bind_linear(leaves, "head")
        states = self.hidden_states(leaves, batch)
        per_step = [layers.linear_forward(head, h) for h in states]
        pooled = layers.linear_forward(head, mean_over_axis(stack(states, axis=0), 0))
        return pooled, per_step

    def loss(self, leaves, batch, labels) -> Value:
        """Mean per-step cross-entropy plus cross-entropy of the pooled logits."""
        pooled, per_step = self.logits(leaves, batch)
        step_losses = stack([softmax_cross_entropy(s, labels) for s in per_step], axis=0)
        return mean_over_axis(step_losses, 0) + softmax_cross_entropy(pooled, labels)

    def forward(self, sequence: np.ndarray) -> ModelOutput:
        """Logits for one ``[T, K, 2]`` or ``[T, 2K]`` sequence."""
        sequence = np.asarray(sequence, dtype=np.float64)
        if sequence.shape[0] == 0:
            raise ValueError("GRU needs at least one time step")
        pooled, per_step = self.logits(self.leaves(requires_grad=False), sequence[None])
        return ModelOutput(pooled.data[0].copy(), np.stack([s.data[0] for s in per_step]))

    def prepare(self, sequence: np.ndarray) -> np.ndarray:
        return np.asarray(sequence, dtype=np.float64)


MODEL_KINDS: dict[str, tuple[type[PoseModel], type]] = {
    "tgcn": (TgcnModel, TgcnConfig),
    "gru": (GruModel, GruConfig),
}


def build_model(kind: str, config, params: dict[str, np.ndarray]) -> PoseModel:
    try:
        model_cls, config_cls = MODEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}") from None
    if isinstance(config, dict):
        config = config_cls(**config)
    return model_cls(config, params)


def create_model(kind: str, classes: int, seed: int, **overrides) -> PoseModel:
    try:
        model_cls, config_cls = MODEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}") from None
    return model_cls.create(config_cls(classes=classes, **overrides), seed)
