"""Signer identification from face embeddings, and dataset statistics."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data.poses import PoseStore, trim
from .data.schema import Manifest

SIGNER_THRESHOLD = 0.9


@dataclass(frozen=True)
class FaceEmbedding:
    video_id: str
    vector: tuple[float, ...]


def read_embeddings(path: str | Path) -> list[FaceEmbedding]:
    doc = json.loads(Path(path).read_text())
    return [FaceEmbedding(str(d["video_id"]), tuple(float(v) for v in d["vector"])) for d in doc]


class UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, u: int) -> int:
        root = u
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[u] != root:
            self.parent[u], u = root, self.parent[u]
        return root

    def union(self, u: int, v: int) -> None:
        ru, rv = self.find(u), self.find(v)
        if ru != rv:
            # smaller index stays the root
            self.parent[max(ru, rv)] = min(ru, rv)


def cluster_signers(embeddings: Sequence[FaceEmbedding] | np.ndarray, threshold: float = SIGNER_THRESHOLD) -> list[int]:
    """Signer id per video: connected components of the "distance < threshold" graph.

    Ids are numbered 0, 1, ... in order of each component's first member.
    """
    if isinstance(embeddings, np.ndarray):
        vectors = np.asarray(embeddings, dtype=np.float64)
    else:
        if not embeddings:
            raise ValueError("no embeddings to cluster")
        dims = {len(e.vector) for e in embeddings}
        if len(dims) != 1:
            raise ValueError(f"embedding dimensions disagree: {sorted(dims)}")
        vectors = np.array([e.vector for e in embeddings], dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise ValueError(f"expected a non-empty [n, d] embedding matrix, got shape {vectors.shape}")

    n = len(vectors)
    uf = UnionFind(n)
    for i in range(n - 1):
        close = np.linalg.norm(vectors[i + 1 :] - vectors[i], axis=1) < threshold
        for j in np.flatnonzero(close).tolist():
            uf.union(i, i + 1 + j)

    ids: dict[int, int] = {}
    return [ids.setdefault(uf.find(i), len(ids)) for i in range(n)]


@dataclass
class DatasetStats:
    gloss_count: int
    video_count: int
    mean_videos_per_gloss: float
    signer_count: int
    mean_duration: float  # seconds
    min_duration: float
    max_duration: float
    intra_class_std: float  # mean over glosses of the population std of durations

    def to_doc(self) -> dict:
        return asdict(self)


def compute_stats(manifest: Manifest, store: PoseStore) -> DatasetStats:
    per_gloss: list[np.ndarray] = []
    signers = set()
    for e in manifest.entries:
        durations = []
        for s in e.instances:
            seq = trim(store.load(s.video_id), s.frame_start, s.frame_end)
            durations.append(seq.duration)
            signers.add(s.signer_id)
        if durations:
            per_gloss.append(np.array(durations))
    all_d = np.concatenate(per_gloss) if per_gloss else np.zeros(0)
    glosses = len(manifest)
    if all_d.size == 0:
        return DatasetStats(glosses, 0, 0.0, 0, 0.0, 0.0, 0.0, 0.0)
    return DatasetStats(
        gloss_count=glosses,
        video_count=int(all_d.size),
        mean_videos_per_gloss=all_d.size / glosses,
        signer_count=len(signers),
        mean_duration=float(all_d.mean()),
        min_duration=float(all_d.min()),
        max_duration=float(all_d.max()),
        # identical durations give an exact 0 rather than rounding noise from the mean
        intra_class_std=float(np.mean([d.std() if np.ptp(d) > 0 else 0.0 for d in per_gloss])),
    )
