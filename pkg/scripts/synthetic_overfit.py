"""Train both pose models on the synthetic corpus and report train and held-out accuracy.

    python scripts/synthetic_overfit.py --seeds 0 1 2 --out runs/overfit.json
"""

import argparse
import json
import tempfile
import time
from pathlib import Path

import numpy as np

from wlasl_pose.data import PoseStore, split_manifest, synth_corpus
from wlasl_pose.evaluation import evaluate
from wlasl_pose.training import TrainConfig, train


def run_once(seed, classes, samples, frames, noise_sd, epochs):
    manifest, poses = synth_corpus(classes, samples, frames, noise_sd, np.random.default_rng(seed))
    manifest = split_manifest(manifest, np.random.default_rng(seed))
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        store = PoseStore(tmp)
        for p in poses.values():
            store.save(p)
        for kind in ("tgcn", "gru"):
            start = time.perf_counter()
            result = train(kind, manifest, store, TrainConfig(max_epochs=epochs, seed=seed))
            row = {
                "seed": seed,
                "model": kind,
                "epochs_run": len(result.log),
                "best_epoch": result.best_epoch,
                "seconds": round(time.perf_counter() - start, 1),
            }
            for split in ("train", "val", "test"):
                report = evaluate(result.model, result.class_names, manifest, store, split)
                row.update({f"{split}_top{k}": v for k, v in report.topk.items()})
            rows.append(row)
            print(
                f"seed {seed} {kind:4s}  train {row['train_top1']:.3f}  val {row['val_top1']:.3f}  "
                f"test {row['test_top1']:.3f}  ({row['epochs_run']} epochs, {row['seconds']}s)",
                flush=True,
            )
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--classes", type=int, default=10)
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--frames", type=int, default=60)
    ap.add_argument("--noise-sd", type=float, default=0.02)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    rows = []
    for seed in args.seeds:
        rows += run_once(seed, args.classes, args.samples, args.frames, args.noise_sd, args.epochs)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(rows, indent=1) + "\n")


if __name__ == "__main__":
    main()
