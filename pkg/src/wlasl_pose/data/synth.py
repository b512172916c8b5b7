"""Synthetic sign corpus for desk-scale experiments.

Each class is a right-hand motif over a still upper body: the hand oscillates
along a class-specific direction with a class-specific frequency and phase,
and the finger spread differs per class. Coordinates are written in pixels
inside a fixed person bbox, so the normal preprocessing path applies.
"""

from __future__ import annotations

import math

import numpy as np

from .poses import KEYPOINTS, LEFT_HAND, RIGHT_HAND, PoseSequence
from .schema import GlossEntry, Manifest, SampleRecord

BBOX = (100.0, 50.0, 300.0, 400.0)
FPS = 25.0

# body keypoints in normalized units (bbox diagonal = 2)
_BODY = np.array(
    [
        [0.0, -0.62], [0.0, -0.40], [-0.22, -0.38], [-0.30, -0.12], [-0.26, 0.10],
        [0.22, -0.38], [0.30, -0.12], [0.26, 0.10], [0.0, 0.20], [-0.15, 0.22],
        [0.15, 0.22], [-0.05, -0.66], [0.05, -0.66],
    ]
)


def _hand_template() -> np.ndarray:
    """Wrist plus five fingers of four joints each, fanned upward."""
    pts = [[0.0, 0.0]]
    for f in range(5):
        angle = math.radians(-60 + 30 * f)
        for j in range(1, 5):
            r = 0.025 * j
            pts.append([r * math.sin(angle), -r * math.cos(angle)])
    return np.array(pts)


_HAND = _hand_template()


def class_motif(label: int, classes: int, frames: int) -> np.ndarray:
    """Noise-free ``[frames, 55, 2]`` trajectory in normalized units."""
    t = np.arange(frames) / FPS
    direction = math.pi * label / classes
    # slow, closely spaced frequencies and strong spatial cues: identity must
    # survive resampling a whole clip to the model window at test time
    freq = 0.5 + 0.1 * (label % 3)  # Hz
    phase = 2.0 * math.pi * label / classes
    spread = 0.6 + 1.4 * label / max(classes - 1, 1)

    coords = np.zeros((frames, KEYPOINTS, 2))
    coords[:, : len(_BODY)] = _BODY
    coords[:, LEFT_HAND.start : LEFT_HAND.stop] = _BODY[7] + _HAND * np.array([-1.0, 1.0])

    swing = 0.4 * np.sin(2 * math.pi * freq * t + phase)
    center = np.array([-0.10, -0.25]) + swing[:, None] * np.array([math.cos(direction), math.sin(direction)])
    coords[:, RIGHT_HAND.start : RIGHT_HAND.stop] = center[:, None, :] + spread * _HAND[None]
    return coords


def to_pixels(coords: np.ndarray, bbox=BBOX) -> np.ndarray:
    x, y, w, h = bbox
    half_diag = math.hypot(w, h) / 2.0
    return coords * half_diag + np.array([x + w / 2.0, y + h / 2.0])


def synth_corpus(
    classes: int,
    samples_per_class: int,
    frames: int,
    noise_sd: float,
    rng: np.random.Generator,
    signers: int = 8,
) -> tuple[Manifest, dict[str, PoseSequence]]:
    """Build ``classes * samples_per_class`` pose sequences and their manifest.

    ``noise_sd`` is the per-coordinate Gaussian noise in normalized units
    (the bbox half-diagonal is one unit).
    """
    if min(classes, samples_per_class, frames) < 1:
        raise ValueError("classes, samples_per_class and frames must be positive")
    entries = []
    poses: dict[str, PoseSequence] = {}
    for c in range(classes):
        gloss = f"sign{c:03d}"
        motif = class_motif(c, classes, frames)
        records = []
        for i in range(samples_per_class):
            vid = f"{gloss}_{i:04d}"
            coords = motif + rng.normal(0.0, noise_sd, size=motif.shape) if noise_sd > 0 else motif
            kp = np.concatenate([to_pixels(coords), np.ones((frames, KEYPOINTS, 1))], axis=-1)
            poses[vid] = PoseSequence(kp, FPS, vid)
            records.append(
                SampleRecord(
                    gloss=gloss,
                    instance_id=vid,
                    signer_id=int(rng.integers(0, signers)),
                    variation_id=0,
                    frame_start=0,
                    frame_end=frames - 1,
                    bbox=BBOX,
                )
            )
        entries.append(GlossEntry(gloss, records))
    return Manifest(entries), poses
