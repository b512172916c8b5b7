"""Training loop: windowed sampling, Adam, best-validation checkpointing."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data.poses import PoseStore, window_start
from .data.schema import Manifest
from .evaluation import evaluate, load_normalized
from .models import PoseModel, create_model
from .optim import AdamState, adam_step
from .tensor import backward

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    max_epochs: int = 200
    window_frames: int = 50
    patience: int = 20
    batch_size: int = 8
    lr: float = 1e-3
    seed: int = 0
    model_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_epochs < 1 or self.patience < 1 or self.batch_size < 1 or self.window_frames < 1:
            raise ValueError("max_epochs, patience, batch_size and window_frames must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    mean_train_loss: float
    val_top1: float

    def to_json(self) -> str:
        return json.dumps({"epoch": self.epoch, "mean_train_loss": self.mean_train_loss, "val_top1": self.val_top1})


@dataclass
class TrainResult:
    model: PoseModel  # parameters from the best validation epoch
    class_names: list[str]
    log: list[EpochRecord]
    best_epoch: int
    best_val_top1: float

    @property
    def meta(self) -> dict:
        return {"best_epoch": self.best_epoch, "best_val_top1": self.best_val_top1}


def _window(coords: np.ndarray, rng: np.random.Generator, frames: int) -> np.ndarray:
    s = window_start(len(coords), frames, rng)
    return coords[s : s + frames]


def _pad(window: np.ndarray, frames: int) -> np.ndarray:
    if len(window) >= frames:
        return window
    return np.concatenate([window, np.repeat(window[-1:], frames - len(window), axis=0)])


def batch_loss_and_grads(model: PoseModel, windows: list[np.ndarray], labels: list[int]) -> tuple[float, dict[str, np.ndarray]]:
    """Batch-mean loss and its gradient.

    Windows of different lengths (GRU with short videos) are run as separate
    sub-batches and weighted by their share of the batch.
    """
    leaves = model.leaves()
    groups: dict[int, list[int]] = defaultdict(list)
    for i, w in enumerate(windows):
        groups[len(w)].append(i)
    total = None
    for idx in groups.values():
        part = model.loss(leaves, np.stack([windows[i] for i in idx]), [labels[i] for i in idx])
        part = part * (len(idx) / len(windows))
        total = part if total is None else total + part
    backward(total)
    return total.item(), {k: v.grad for k, v in leaves.items()}


def train(
    kind: str,
    manifest: Manifest,
    store: PoseStore,
    config: TrainConfig,
    log_path: str | Path | None = None,
    model: PoseModel | None = None,
) -> TrainResult:
    """Train a ``tgcn`` or ``gru`` classifier on the manifest's train split.

    Validation top-1 is measured after every epoch on full-length val
    sequences. Training stops after ``max_epochs`` or once val top-1 has not
    improved for ``patience`` epochs; the best-val parameters are returned.
    """
    class_names = manifest.glosses
    index = manifest.class_index()
    train_set = list(manifest.samples("train"))
    val_set = list(manifest.samples("val"))
    if not train_set:
        raise ValueError("train split is empty")
    if not val_set:
        raise ValueError("val split is empty")

    init_seq, data_seq = np.random.SeedSequence(config.seed).spawn(2)
    if model is None:
        options = dict(config.model_options)
        if kind == "tgcn":
            options.setdefault("window_frames", config.window_frames)
        model = create_model(kind, len(class_names), int(init_seq.generate_state(1)[0]), **options)
    elif model.classes != len(class_names):
        raise ValueError(f"model has {model.classes} classes, manifest has {len(class_names)} glosses")
    elif model.kind != kind:
        raise ValueError(f"model kind {model.kind!r} does not match {kind!r}")
    rng = np.random.default_rng(data_seq)

    cache = {r.video_id: load_normalized(store, r) for r in train_set + val_set}
    labels = np.array([index[r.gloss] for r in train_set])
    fixed_length = model.kind == "tgcn"
    frames = model.config.window_frames if fixed_length else config.window_frames

    opt = AdamState(lr=config.lr)
    history: list[EpochRecord] = []
    best_params, best_epoch, best_val, stale = dict(model.params), 0, -1.0, 0
    log_file = open(log_path, "a") if log_path is not None else None
    try:
        for epoch in range(1, config.max_epochs + 1):
            order = rng.permutation(len(train_set))
            loss_sum = 0.0
            for lo in range(0, len(order), config.batch_size):
                idx = order[lo : lo + config.batch_size]
                windows = [_window(cache[train_set[i].video_id], rng, frames) for i in idx]
                if fixed_length:
                    windows = [_pad(w, frames) for w in windows]
                loss, grads = batch_loss_and_grads(model, windows, labels[idx].tolist())
                model.params, _ = adam_step(opt, model.params, grads)
                loss_sum += loss * len(idx)
            val_top1 = evaluate(model, class_names, manifest, store, "val", ks=(1,), cache=cache).topk[1]
            record = EpochRecord(epoch, loss_sum / len(train_set), val_top1)
            history.append(record)
            if log_file is not None:
                log_file.write(record.to_json() + "\n")
                log_file.flush()
            log.info("epoch %d loss %.4f val top-1 %.4f", epoch, record.mean_train_loss, val_top1)
            if val_top1 > best_val:
                best_params, best_epoch, best_val, stale = dict(model.params), epoch, val_top1, 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    finally:
        if log_file is not None:
            log_file.close()

    model.params = best_params
    return TrainResult(model, class_names, history, best_epoch, best_val)
