"""Self-describing JSON checkpoints.

Floats are written with ``repr`` precision, so a load/save cycle reproduces
the file byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .models import PoseModel, build_model

FORMAT = "wlasl-pose-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def checkpoint_doc(model: PoseModel, class_names: list[str], meta: dict | None = None) -> dict:
    if len(class_names) != model.classes:
        raise CheckpointError(f"{len(class_names)} class names for a {model.classes}-class model")
    return {
        "format": FORMAT,
        "version": VERSION,
        "model_kind": model.kind,
        "config": model.config_dict(),
        "classes": list(class_names),
        "meta": meta or {},
        "params": {
            name: {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()} for name, arr in sorted(model.params.items())
        },
    }


def dumps_checkpoint(model: PoseModel, class_names: list[str], meta: dict | None = None) -> str:
    return json.dumps(checkpoint_doc(model, class_names, meta), sort_keys=True)


def save_checkpoint(path: str | Path, model: PoseModel, class_names: list[str], meta: dict | None = None) -> None:
    Path(path).write_text(dumps_checkpoint(model, class_names, meta))


def model_from_doc(doc: dict) -> tuple[PoseModel, list[str], dict]:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CheckpointError("not a checkpoint document")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"checkpoint version {doc.get('version')!r} is not supported (expected {VERSION})")
    try:
        params = {}
        for name, entry in doc["params"].items():
            shape = tuple(entry["shape"])
            data = np.asarray(entry["data"], dtype=np.float64)
            if data.size != int(np.prod(shape)):
                raise CheckpointError(f"parameter {name}: {data.size} values for shape {shape}")
            params[name] = data.reshape(shape)
        model = build_model(doc["model_kind"], dict(doc["config"]), params)
    except KeyError as exc:
        raise CheckpointError(f"checkpoint is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(str(exc)) from exc
    classes = list(doc["classes"])
    if len(classes) != model.classes:
        raise CheckpointError(f"{len(classes)} class names for a {model.classes}-class model")
    return model, classes, dict(doc.get("meta", {}))


def load_checkpoint(path: str | Path) -> tuple[PoseModel, list[str], dict]:
    """Returns ``(model, class_names, meta)``."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: truncated or corrupt checkpoint ({exc})") from exc
    return model_from_doc(doc)
