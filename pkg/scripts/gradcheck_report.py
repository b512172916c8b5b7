"""Finite-difference gradient report for both models across seeds and sizes.

    python scripts/gradcheck_report.py --seeds 0 1 2 3 4
"""

import argparse

from wlasl_pose.gradcheck import check_model_gradients


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=list(range(5)))
    ap.add_argument("--vertices", type=int, nargs="+", default=[5, 8])
    ap.add_argument("--frames", type=int, default=4)
    ap.add_argument("--classes", type=int, default=3)
    ap.add_argument("--tol", type=float, default=1e-4)
    args = ap.parse_args()

    worst = 0.0
    for kind in ("tgcn", "gru"):
        for k in args.vertices:
            for seed in args.seeds:
                res = check_model_gradients(kind, vertices=k, frames=args.frames, classes=args.classes, seed=seed)
                name, err = max(res.per_param.items(), key=lambda kv: kv[1])
                worst = max(worst, res.max_rel_error)
                print(f"{kind:4s} K={k:<2d} seed={seed}  max rel err {res.max_rel_error:.2e}  ({name})")
    print(f"worst {worst:.2e}, tolerance {args.tol:g}: {'ok' if worst <= args.tol else 'FAILED'}")
    raise SystemExit(0 if worst <= args.tol else 1)


if __name__ == "__main__":
    main()
