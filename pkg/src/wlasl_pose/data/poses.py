"""Keypoint trajectories: file format, normalization, windowing."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

BODY = range(0, 13)
LEFT_HAND = range(13, 34)
RIGHT_HAND = range(34, 55)
KEYPOINTS = 55
LAYOUT = "body13+left_hand21+right_hand21"
POSE_FORMAT_VERSION = 1

# bbox diagonal is rescaled to this many units, then divided by half of it
TARGET_DIAGONAL = 256.0
WINDOW_FRAMES = 50


class PoseFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PoseSequence:
    """``keypoints`` is ``[T, 55, 3]`` holding (x, y, confidence) per keypoint."""

    keypoints: np.ndarray
    fps: float = 25.0
    video_id: str = ""

    def __post_init__(self):
        kp = np.asarray(self.keypoints, dtype=np.float64)
        if kp.ndim != 3 or kp.shape[1:] != (KEYPOINTS, 3):
            raise PoseFormatError(f"{self.video_id}: keypoints must be [T, {KEYPOINTS}, 3], got {kp.shape}")
        conf = kp[..., 2]
        if np.any((conf < 0) | (conf > 1)):
            raise PoseFormatError(f"{self.video_id}: confidences must lie in [0, 1]")
        if self.fps <= 0:
            raise PoseFormatError(f"{self.video_id}: fps must be positive")
        object.__setattr__(self, "keypoints", kp)

    def __len__(self) -> int:
        return self.keypoints.shape[0]

    @property
    def coords(self) -> np.ndarray:
        return self.keypoints[..., :2]

    @property
    def confidence(self) -> np.ndarray:
        return self.keypoints[..., 2]

    @property
    def duration(self) -> float:
        return len(self) / self.fps

    def frames(self, start: int, stop: int) -> "PoseSequence":
        return replace(self, keypoints=self.keypoints[start:stop].copy())


# ---------------------------------------------------------------- file format


def pose_to_doc(seq: PoseSequence) -> dict:
    return {
        "video_id": seq.video_id,
        "fps": seq.fps,
        "layout": LAYOUT,
        "version": POSE_FORMAT_VERSION,
        "frames": seq.keypoints.tolist(),
    }


def pose_from_doc(doc: dict) -> PoseSequence:
    if doc.get("version") != POSE_FORMAT_VERSION:
        raise PoseFormatError(f"unsupported pose document version {doc.get('version')!r}")
    if doc.get("layout") != LAYOUT:
        raise PoseFormatError(f"unsupported keypoint layout {doc.get('layout')!r}")
    frames = doc["frames"]
    kp = np.asarray(frames, dtype=np.float64) if frames else np.zeros((0, KEYPOINTS, 3))
    return PoseSequence(kp, float(doc["fps"]), str(doc["video_id"]))


def write_pose(seq: PoseSequence, path: str | Path) -> None:
    Path(path).write_text(json.dumps(pose_to_doc(seq)))


def read_pose(path: str | Path) -> PoseSequence:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise PoseFormatError(f"{path}: not a JSON document ({exc})") from exc
    return pose_from_doc(doc)


class PoseStore:
    """A directory of ``<video_id>.json`` pose documents."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, video_id: str) -> Path:
        return self.root / f"{video_id}.json"

    def __contains__(self, video_id: str) -> bool:
        return self.path(video_id).is_file()

    def load(self, video_id: str) -> PoseSequence:
        p = self.path(video_id)
        if not p.is_file():
            raise FileNotFoundError(f"missing pose file for {video_id!r}: {p}")
        return read_pose(p)

    def save(self, seq: PoseSequence) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        p = self.path(seq.video_id)
        write_pose(seq, p)
        return p


# ---------------------------------------------------------------- preprocessing


def trim(seq: PoseSequence, frame_start: int, frame_end: int) -> PoseSequence:
    """Keep frames ``frame_start..frame_end`` inclusive (``-1`` = through the end)."""
    stop = len(seq) if frame_end < 0 else min(frame_end + 1, len(seq))
    return seq.frames(min(frame_start, len(seq)), stop)


def normalize_pose(seq: PoseSequence, bbox) -> PoseSequence:
    """Center on the person bbox and scale so its diagonal spans 2 units.

    Equivalent to resizing the frame so the bbox diagonal is 256 pixels,
    then dividing by 128. Keypoints with zero confidence become (0, 0).
    """
    x, y, w, h = (float(v) for v in bbox)
    diag = math.hypot(w, h)
    if not diag > 0:
        raise ValueError(f"degenerate bbox {tuple(bbox)}: zero diagonal")
    center = np.array([x + w / 2.0, y + h / 2.0])
    scale = TARGET_DIAGONAL / diag / (TARGET_DIAGONAL / 2.0)
    kp = seq.keypoints.copy()
    kp[..., :2] = (kp[..., :2] - center) * scale
    kp[kp[..., 2] == 0, :2] = 0.0
    return replace(seq, keypoints=kp)


def flip_horizontal(seq: PoseSequence) -> PoseSequence:
    """Mirror normalized x and swap the left and right hand blocks."""
    kp = seq.keypoints.copy()
    kp[..., 0] *= -1.0
    left, right = kp[:, LEFT_HAND.start : LEFT_HAND.stop].copy(), kp[:, RIGHT_HAND.start : RIGHT_HAND.stop].copy()
    kp[:, LEFT_HAND.start : LEFT_HAND.stop] = right
    kp[:, RIGHT_HAND.start : RIGHT_HAND.stop] = left
    return replace(seq, keypoints=kp)


def window_start(length: int, window: int, rng: np.random.Generator) -> int:
    if length <= 0:
        raise ValueError("cannot sample a window from an empty sequence")
    if length <= window:
        return 0
    return int(rng.integers(0, length - window + 1))


def sample_window(seq: PoseSequence, rng: np.random.Generator, window: int = WINDOW_FRAMES) -> PoseSequence:
    """At most ``window`` consecutive frames starting at a uniform random offset."""
    s = window_start(len(seq), window, rng)
    return seq.frames(s, s + window)


def pad_frames(seq: PoseSequence, frames: int = WINDOW_FRAMES) -> PoseSequence:
    """Repeat the last frame until the sequence has ``frames`` frames."""
    if len(seq) == 0:
        raise ValueError("cannot pad an empty sequence")
    if len(seq) >= frames:
        return seq
    pad = np.repeat(seq.keypoints[-1:], frames - len(seq), axis=0)
    return replace(seq, keypoints=np.concatenate([seq.keypoints, pad]))
