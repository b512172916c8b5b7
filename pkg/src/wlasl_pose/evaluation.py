"""Top-K accuracy over full-length sequences."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data.poses import PoseStore, normalize_pose, trim
from .data.schema import Manifest, SampleRecord
from .models import PoseModel, rank_classes

TOP_KS = (1, 5, 10)


@dataclass
class EvalReport:
    topk: dict[int, float]
    instance_count: int
    per_gloss: dict[str, dict] = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "instance_count": self.instance_count,
            "topk": {f"top{k}": v for k, v in sorted(self.topk.items())},
            "per_gloss": self.per_gloss,
        }


def topk_hits(logits: np.ndarray, labels: Sequence[int], ks: Sequence[int] = TOP_KS) -> np.ndarray:
    """Boolean ``[n, len(ks)]``: is the label within the first k ranks of each row."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or logits.shape[0] != labels.shape[0]:
        raise ValueError(f"logits {logits.shape} do not match {labels.shape[0]} labels")
    position = np.empty(len(labels), dtype=np.int64)
    for i, row in enumerate(logits):
        position[i] = rank_classes(row).index(int(labels[i]))
    return position[:, None] < np.asarray(ks)[None, :]


def topk_report(
    logits: np.ndarray,
    labels: Sequence[int],
    ks: Sequence[int] = TOP_KS,
    class_names: Sequence[str] | None = None,
) -> EvalReport:
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if n == 0:
        raise ValueError("nothing to evaluate")
    hits = topk_hits(logits, labels, ks)
    totals = hits.sum(axis=0)  # integer counts, so the reduction order does not matter
    report = EvalReport({k: float(totals[j]) / n for j, k in enumerate(ks)}, n)
    groups: dict[int, list[int]] = defaultdict(list)
    for i, lab in enumerate(labels.tolist()):
        groups[lab].append(i)
    for lab in sorted(groups):
        idx = groups[lab]
        name = class_names[lab] if class_names is not None else str(lab)
        entry = {"count": len(idx)}
        entry.update({f"top{k}": float(hits[idx, j].sum()) / len(idx) for j, k in enumerate(ks)})
        report.per_gloss[name] = entry
    return report


def load_normalized(store: PoseStore, record: SampleRecord) -> np.ndarray:
    """``[T, 55, 2]`` normalized coordinates of one trimmed sample."""
    seq = trim(store.load(record.video_id), record.frame_start, record.frame_end)
    if len(seq) == 0:
        raise ValueError(f"{record.video_id}: no frames inside [{record.frame_start}, {record.frame_end}]")
    return normalize_pose(seq, record.bbox).coords


def batched_logits(model: PoseModel, sequences: Sequence[np.ndarray], chunk: int = 64) -> np.ndarray:
    """Pooled logits for full sequences, batching those of equal prepared length."""
    prepared = [model.prepare(s) for s in sequences]
    out = np.zeros((len(prepared), model.classes))
    by_len: dict[int, list[int]] = defaultdict(list)
    for i, p in enumerate(prepared):
        by_len[p.shape[0]].append(i)
    for idx in by_len.values():
        for lo in range(0, len(idx), chunk):
            part = idx[lo : lo + chunk]
            out[part] = model.predict_batch_logits(np.stack([prepared[i] for i in part]))
    return out


def evaluate(
    model: PoseModel,
    class_names: Sequence[str],
    manifest: Manifest,
    store: PoseStore,
    split: str | None = "test",
    ks: Sequence[int] = TOP_KS,
    cache: dict | None = None,
) -> EvalReport:
    """Top-K accuracy of ``model`` on one split (``None`` = every sample)."""
    if len(class_names) != model.classes:
        raise ValueError(f"{len(class_names)} class names for a {model.classes}-class model")
    index = {g: i for i, g in enumerate(class_names)}
    records = list(manifest.samples(split))
    if not records:
        raise ValueError(f"split {split!r} is empty")
    unknown = sorted({r.gloss for r in records if r.gloss not in index})
    if unknown:
        raise ValueError(f"glosses not known to the model: {', '.join(unknown[:5])}")
    seqs = []
    for r in records:
        if cache is not None and r.video_id in cache:
            seqs.append(cache[r.video_id])
        else:
            seqs.append(load_normalized(store, r))
    logits = batched_logits(model, seqs)
    return topk_report(logits, [index[r.gloss] for r in records], ks, class_names)
