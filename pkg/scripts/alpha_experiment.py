"""Compare feedback-token recall of the toy fusion model with and without
down-weighting the continuation token."""
import argparse

import numpy as np

from kincoach.fusion import copy_task, evaluate_fusion, train_fusion


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--steps", type=int, default=80)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--length", type=int, default=16)
    ap.add_argument("--p-violation", type=float, default=0.2)
    ap.add_argument("--alphas", type=float, nargs="+", default=[1.0, 0.1])
    args = ap.parse_args()

    for a in args.alphas:
        recall, acc = [], []
        for seed in range(args.seeds):
            train = copy_task(256, seed=seed, length=args.length, p_violation=args.p_violation)
            test = copy_task(200, seed=100 + seed, length=args.length, p_violation=args.p_violation)
            m = train_fusion(train, steps=args.steps, lr=args.lr, alpha=a, seed=seed)
            r = evaluate_fusion(m, test)
            recall.append(r["feedback_recall"])
            acc.append(r["accuracy"])
        print(f"alpha={a:<4} feedback recall {np.mean(recall):.3f} +- {np.std(recall):.3f}  "
              f"accuracy {np.mean(acc):.3f}  per seed {np.round(recall, 2).tolist()}")


if __name__ == "__main__":
    main()
