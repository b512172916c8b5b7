"""Command-line entry point: ``wlasl-pose <command> ...``.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checkpoint, curation, gradcheck
from .data import (
    PoseStore,
    build_subset,
    dumps_manifest,
    normalize_pose,
    read_manifest,
    read_pose,
    split_manifest,
    synth_corpus,
    write_manifest,
)
from .evaluation import evaluate
from .training import TrainConfig, train

GRADCHECK_TOL = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(args, payload: dict, plain: str) -> None:
    if args.format == "structured":
        print(json.dumps(payload, indent=1, sort_keys=True))
    else:
        print(plain)


def _write_text(path: str, text: str) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def _bbox(text: str) -> tuple[float, ...]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("--bbox needs x,y,width,height")
    return tuple(parts)


# ---------------------------------------------------------------- commands


def cmd_split(args) -> int:
    m = split_manifest(read_manifest(args.manifest, args.bbox_format), np.random.default_rng(args.seed))
    m.validate(require_splits=True)
    _write_text(args.out, dumps_manifest(m))
    counts = {sp: sum(1 for _ in m.samples(sp)) for sp in ("train", "val", "test")}
    _emit(args, {"out": args.out, "counts": counts}, f"wrote {args.out}: " + ", ".join(f"{k} {v}" for k, v in counts.items()))
    return 0


def cmd_subset(args) -> int:
    m = read_manifest(args.manifest, args.bbox_format)
    spec = build_subset(m, args.size)
    sub = m.restrict(list(spec.glosses))
    _write_text(args.out, dumps_manifest(sub))
    videos = sum(len(e.instances) for e in sub.entries)
    _emit(args, {"out": args.out, "glosses": spec.size, "videos": videos}, f"wrote {args.out}: {spec.size} glosses, {videos} videos")
    return 0


def cmd_stats(args) -> int:
    stats = curation.compute_stats(read_manifest(args.manifest, args.bbox_format), PoseStore(args.poses))
    doc = stats.to_doc()
    if args.out:
        _write_text(args.out, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    _emit(args, doc, "\n".join(f"{k}: {v:.4g}" if isinstance(v, float) else f"{k}: {v}" for k, v in doc.items()))
    return 0


def cmd_synth(args) -> int:
    m, poses = synth_corpus(args.classes, args.samples, args.frames, args.noise_sd, np.random.default_rng(args.seed))
    out = Path(args.out)
    store = PoseStore(out / "poses")
    for seq in poses.values():
        store.save(seq)
    write_manifest(m, out / "manifest.json")
    _emit(
        args,
        {"manifest": str(out / "manifest.json"), "poses": str(store.root), "videos": len(poses)},
        f"wrote {len(poses)} pose files to {store.root} and {out / 'manifest.json'}",
    )
    return 0


def cmd_cluster(args) -> int:
    embeddings = curation.read_embeddings(args.embeddings)
    ids = curation.cluster_signers(embeddings, args.threshold)
    rows = [{"video_id": e.video_id, "signer_id": i} for e, i in zip(embeddings, ids)]
    if args.out:
        _write_text(args.out, json.dumps(rows, indent=1) + "\n")
    signers = len(set(ids))
    _emit(args, {"signers": signers, "assignments": rows}, f"{len(rows)} videos, {signers} signers")
    return 0


def cmd_train(args) -> int:
    manifest = read_manifest(args.manifest, args.bbox_format)
    manifest.validate(require_splits=True)
    config = TrainConfig(
        max_epochs=args.epochs,
        window_frames=args.window,
        patience=args.patience,
        batch_size=args.batch_size,
        lr=args.lr,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "train_log.jsonl"
    log_path.unlink(missing_ok=True)
    result = train(args.model, manifest, PoseStore(args.poses), config, log_path=log_path)
    checkpoint.save_checkpoint(out / "checkpoint.json", result.model, result.class_names, result.meta)
    _emit(
        args,
        {"checkpoint": str(out / "checkpoint.json"), "log": str(log_path), "epochs": len(result.log), **result.meta},
        f"trained {len(result.log)} epochs; best val top-1 {result.best_val_top1:.4f} at epoch {result.best_epoch}",
    )
    return 0


def cmd_eval(args) -> int:
    model, classes, _ = checkpoint.load_checkpoint(args.checkpoint)
    manifest = read_manifest(args.manifest, args.bbox_format)
    split = None if args.split == "all" else args.split
    report = evaluate(model, classes, manifest, PoseStore(args.poses), split)
    doc = report.to_doc()
    if args.out:
        _write_text(args.out, json.dumps(doc, indent=1, sort_keys=True) + "\n")
    plain = f"{report.instance_count} instances\n" + "\n".join(f"top-{k}: {v:.4f}" for k, v in sorted(report.topk.items()))
    _emit(args, doc, plain)
    return 0


def cmd_predict(args) -> int:
    model, classes, _ = checkpoint.load_checkpoint(args.checkpoint)
    seq = read_pose(args.pose)
    coords = normalize_pose(seq, args.bbox).coords
    ranking = model.predict(coords)[: args.top]
    ranked = [classes[i] for i in ranking]
    _emit(args, {"video_id": seq.video_id, "ranking": ranked}, "\n".join(f"{r + 1}. {g}" for r, g in enumerate(ranked)))
    return 0


def cmd_gradcheck(args) -> int:
    result = gradcheck.check_model_gradients(args.model, args.k, args.frames, args.classes, args.seed, hidden=args.hidden)
    ok = result.passed(GRADCHECK_TOL)
    _emit(
        args,
        {"model": args.model, "max_rel_error": result.max_rel_error, "passed": ok, "per_param": result.per_param},
        f"max relative error {result.max_rel_error:.3e} ({'ok' if ok else 'FAILED'}, tolerance {GRADCHECK_TOL:g})",
    )
    return 0 if ok else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wlasl-pose", description="Pose-based isolated sign recognition toolkit.", allow_abbrev=False)
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help_):
        p = sub.add_parser(name, help=help_, allow_abbrev=False)
        p.add_argument("--format", choices=("plain", "structured"), default="plain")
        p.set_defaults(func=func)
        return p

    def manifest_flags(p, required=True):
        p.add_argument("--manifest", required=required)
        p.add_argument("--bbox-format", choices=("xywh", "xyxy"), default="xywh")

    p = command("split", cmd_split, "assign train/val/test splits 4:1:1 per gloss")
    manifest_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = command("subset", cmd_subset, "keep the top-K glosses by sample count")
    manifest_flags(p)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--out", required=True)

    p = command("stats", cmd_stats, "dataset statistics")
    manifest_flags(p)
    p.add_argument("--poses", required=True)
    p.add_argument("--out")

    p = command("synth", cmd_synth, "generate a synthetic pose corpus")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--noise-sd", type=float, default=0.02)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = command("cluster-signers", cmd_cluster, "group videos by signer from face embeddings")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--threshold", type=float, default=curation.SIGNER_THRESHOLD)
    p.add_argument("--out")

    p = command("train", cmd_train, "train a pose model")
    p.add_argument("--model", choices=("tgcn", "gru"), required=True)
    manifest_flags(p)
    p.add_argument("--poses", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--window", type=int, default=50)

    p = command("eval", cmd_eval, "top-K accuracy of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    manifest_flags(p)
    p.add_argument("--poses", required=True)
    p.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    p.add_argument("--out")

    p = command("predict", cmd_predict, "rank glosses for one pose file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pose", required=True)
    p.add_argument("--bbox", type=_bbox, required=True, help="x,y,width,height in pixels")
    p.add_argument("--top", type=int, default=10)

    p = command("gradcheck", cmd_gradcheck, "finite-difference check of a tiny model")
    p.add_argument("--model", choices=("tgcn", "gru"), required=True)
    p.add_argument("--k", type=int, default=5, help="vertex count")
    p.add_argument("--frames", type=int, default=4)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--hidden", type=int, default=4, help="GRU hidden width")
    p.add_argument("--seed", type=int, default=0)
    return parser


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"{args.command}: I/O error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
