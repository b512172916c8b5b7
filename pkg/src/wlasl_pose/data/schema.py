"""Manifest schema and its JSON document form.

A manifest document is a list of ``{"gloss": ..., "instances": [...]}`` entries.
Instance fields we understand are mapped onto :class:`SampleRecord`; anything
else is carried through untouched in ``extra`` so foreign manifests survive a
read/write cycle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

SPLITS = ("train", "val", "test")

_KNOWN = ("instance_id", "signer_id", "variation_id", "frame_start", "frame_end", "bbox", "split", "url")


class ManifestError(ValueError):
    """A manifest violates the schema."""


@dataclass(frozen=True)
class SampleRecord:
    gloss: str
    instance_id: str
    signer_id: int = 0
    variation_id: int = 0
    frame_start: int = 0
    frame_end: int = -1  # inclusive; -1 runs to the last frame
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)  # x, y, width, height in pixels
    split: str | None = None
    url: str | None = None
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def video_id(self) -> str:
        """Key of the pose document for this sample."""
        vid = self.extra.get("video_id")
        return str(vid) if vid is not None else self.instance_id

    def validate(self) -> None:
        if self.frame_start < 0:
            raise ManifestError(f"{self.instance_id}: negative frame_start {self.frame_start}")
        if self.frame_end != -1 and self.frame_end < self.frame_start:
            raise ManifestError(f"{self.instance_id}: frame_end {self.frame_end} before frame_start {self.frame_start}")
        if len(self.bbox) != 4 or self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise ManifestError(f"{self.instance_id}: bbox extents must be positive, got {self.bbox}")
        if self.split is not None and self.split not in SPLITS:
            raise ManifestError(f"{self.instance_id}: unknown split {self.split!r}")

    def to_doc(self) -> dict:
        doc = dict(self.extra)
        doc.update(
            instance_id=self.instance_id,
            signer_id=self.signer_id,
            variation_id=self.variation_id,
            frame_start=self.frame_start,
            frame_end=self.frame_end,
            bbox=list(self.bbox),
            split=self.split,
        )
        if self.url is not None:
            doc["url"] = self.url
        return doc

    @classmethod
    def from_doc(cls, gloss: str, doc: dict, bbox_format: str = "xywh") -> "SampleRecord":
        try:
            bbox = tuple(float(v) for v in doc["bbox"])
            if bbox_format == "xyxy":
                bbox = (bbox[0], bbox[1], bbox[2] - bbox[0], bbox[3] - bbox[1])
            elif bbox_format != "xywh":
                raise ManifestError(f"unknown bbox format {bbox_format!r}")
            return cls(
                gloss=gloss,
                instance_id=str(doc["instance_id"]),
                signer_id=int(doc.get("signer_id", 0)),
                variation_id=int(doc.get("variation_id", 0)),
                frame_start=int(doc.get("frame_start", 0)),
                frame_end=int(doc.get("frame_end", -1)),
                bbox=bbox,
                split=doc.get("split"),
                url=doc.get("url"),
                extra={k: v for k, v in doc.items() if k not in _KNOWN},
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ManifestError):
                raise
            raise ManifestError(f"bad instance under gloss {gloss!r}: {exc!r}") from exc

    def with_split(self, split: str | None) -> "SampleRecord":
        return replace(self, split=split)


@dataclass
class GlossEntry:
    gloss: str
    instances: list[SampleRecord]


@dataclass
class Manifest:
    entries: list[GlossEntry] = field(default_factory=list)

    @property
    def glosses(self) -> list[str]:
        return [e.gloss for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def samples(self, split: str | None = None) -> Iterator[SampleRecord]:
        for e in self.entries:
            for s in e.instances:
                if split is None or s.split == split:
                    yield s

    def counts(self) -> dict[str, int]:
        return {e.gloss: len(e.instances) for e in self.entries}

    def class_index(self) -> dict[str, int]:
        return {g: i for i, g in enumerate(self.glosses)}

    def restrict(self, glosses: list[str]) -> "Manifest":
        by_name = {e.gloss: e for e in self.entries}
        return Manifest([GlossEntry(g, list(by_name[g].instances)) for g in glosses])

    def validate(self, require_splits: bool = False) -> None:
        seen: set[str] = set()
        names: set[str] = set()
        for e in self.entries:
            if e.gloss in names:
                raise ManifestError(f"duplicate gloss {e.gloss!r}")
            names.add(e.gloss)
            for s in e.instances:
                s.validate()
                if s.gloss != e.gloss:
                    raise ManifestError(f"{s.instance_id}: record gloss {s.gloss!r} filed under {e.gloss!r}")
                if s.video_id in seen:
                    raise ManifestError(f"duplicate instance id {s.video_id!r}")
                seen.add(s.video_id)
            if require_splits:
                present = {s.split for s in e.instances}
                missing = [sp for sp in SPLITS if sp not in present]
                if missing:
                    raise ManifestError(f"gloss {e.gloss!r} has no samples in {', '.join(missing)}")

    def to_doc(self) -> list[dict]:
        return [{"gloss": e.gloss, "instances": [s.to_doc() for s in e.instances]} for e in self.entries]

    @classmethod
    def from_doc(cls, doc, bbox_format: str = "xywh") -> "Manifest":
        if not isinstance(doc, list):
            raise ManifestError("manifest document must be a list of gloss entries")
        entries = []
        for item in doc:
            try:
                gloss = str(item["gloss"])
                instances = item["instances"]
            except (KeyError, TypeError) as exc:
                raise ManifestError(f"bad gloss entry: {exc!r}") from exc
            entries.append(GlossEntry(gloss, [SampleRecord.from_doc(gloss, d, bbox_format) for d in instances]))
        return cls(entries)


def dumps_manifest(manifest: Manifest) -> str:
    return json.dumps(manifest.to_doc(), indent=1) + "\n"


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    Path(path).write_text(dumps_manifest(manifest))


def read_manifest(path: str | Path, bbox_format: str = "xywh") -> Manifest:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not a JSON document ({exc})") from exc
    return Manifest.from_doc(doc, bbox_format)
