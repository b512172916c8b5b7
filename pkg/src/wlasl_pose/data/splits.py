"""Gloss filtering, top-K subsets, and train/val/test splitting."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .schema import SPLITS, GlossEntry, Manifest, ManifestError

SUBSET_SIZES = (100, 300, 1000, 2000)
SPLIT_RATIO = (4, 1, 1)
MIN_VIDEOS_PER_GLOSS = 7
MIN_EXAMPLES_PER_VARIATION = 5


@dataclass(frozen=True)
class SubsetSpec:
    size: int
    glosses: tuple[str, ...]

    def __post_init__(self):
        if len(self.glosses) != self.size:
            raise ValueError(f"subset of size {self.size} lists {len(self.glosses)} glosses")

    @property
    def name(self) -> str:
        return f"WLASL{self.size}"


def build_subset(manifest: Manifest, size: int) -> SubsetSpec:
    """The ``size`` glosses with the most samples; ties by ascending gloss."""
    if size < 1:
        raise ValueError(f"subset size must be positive, got {size}")
    if len(manifest) < size:
        raise ManifestError(f"manifest has {len(manifest)} glosses, subset needs {size}")
    ranked = sorted(manifest.entries, key=lambda e: (-len(e.instances), e.gloss))
    return SubsetSpec(size, tuple(e.gloss for e in ranked[:size]))


def apportion(n: int, weights=SPLIT_RATIO) -> tuple[int, ...]:
    """Largest-remainder split of ``n`` items by ``weights``, at least one per part.

    Remainder ties go to the earlier part. Parts short of one item borrow from
    the currently largest part.
    """
    parts = len(weights)
    if n < parts:
        raise ValueError(f"cannot give {parts} parts at least one of {n} items")
    total = sum(weights)
    quotas = [n * w / total for w in weights]
    counts = [int(q) for q in quotas]
    order = sorted(range(parts), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    for i in range(parts):
        while counts[i] < 1:
            donor = max(range(parts), key=lambda j: (counts[j], -j))
            counts[donor] -= 1
            counts[i] += 1
    return tuple(counts)


def split_manifest(manifest: Manifest, rng: np.random.Generator) -> Manifest:
    """Assign every sample to train/val/test with 4:1:1 proportions per gloss.

    Each gloss's samples are permuted with ``rng``; the first ``n_train`` of the
    permutation go to train, the next ``n_val`` to val, the rest to test.
    Sample order in the output matches the input.
    """
    out = []
    for e in manifest.entries:
        n = len(e.instances)
        if n < len(SPLITS):
            raise ManifestError(f"gloss {e.gloss!r} has {n} samples; splitting needs at least {len(SPLITS)}")
        n_train, n_val, _ = apportion(n)
        labels = np.empty(n, dtype=object)
        perm = rng.permutation(n)
        labels[perm[:n_train]] = "train"
        labels[perm[n_train : n_train + n_val]] = "val"
        labels[perm[n_train + n_val :]] = "test"
        out.append(GlossEntry(e.gloss, [s.with_split(str(lab)) for s, lab in zip(e.instances, labels)]))
    return Manifest(out)


def split_counts(manifest: Manifest) -> dict[str, tuple[int, int, int]]:
    return {
        e.gloss: tuple(sum(1 for s in e.instances if s.split == sp) for sp in SPLITS) for e in manifest.entries
    }


def filter_gloss_min_count(manifest: Manifest, min_videos: int = MIN_VIDEOS_PER_GLOSS) -> Manifest:
    return Manifest([GlossEntry(e.gloss, list(e.instances)) for e in manifest.entries if len(e.instances) >= min_videos])


def filter_variation_min_count(manifest: Manifest, min_examples: int = MIN_EXAMPLES_PER_VARIATION) -> Manifest:
    """Drop (gloss, variation) groups with fewer than ``min_examples`` samples.

    Glosses left with no samples are dropped too.
    """
    out = []
    for e in manifest.entries:
        sizes: dict[int, int] = defaultdict(int)
        for s in e.instances:
            sizes[s.variation_id] += 1
        kept = [s for s in e.instances if sizes[s.variation_id] >= min_examples]
        if kept:
            out.append(GlossEntry(e.gloss, kept))
    return Manifest(out)
