"""Cycle-boundary recovery on seeded synthetic sessions, per exercise and
period band."""
import argparse
from collections import defaultdict

import numpy as np

from kincoach.cycles import segment_cycles
from kincoach.generator import generate_session
from kincoach.skeleton import resolve_config

BANDS = ((0.9, 2.0), (2.0, 3.0), (3.0, 4.5))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sessions", type=int, default=40, help="per exercise and band")
    ap.add_argument("--tol", type=int, default=4, help="boundary tolerance, frames")
    ap.add_argument("--max-noise", type=float, default=2.0, help="deg")
    ap.add_argument("--exercises", nargs="+", default=["squat", "pushup", "lunge", "high_knees"])
    args = ap.parse_args()

    for name in args.exercises:
        cfg = resolve_config(name)
        for lo, hi in BANDS:
            hit = total = bad = 0
            for seed in range(args.sessions):
                rng = np.random.default_rng(seed)
                s = generate_session(cfg, int(rng.integers(3, 11)), seed=seed, period_s=rng.uniform(lo, hi),
                                     noise_deg=rng.uniform(0, args.max_noise))
                found = segment_cycles(s.angles[:, cfg.representative_dof], cfg)
                bad += sum(not 24 <= c.length <= 150 for c in found)
                for i_s, i_e in s.cycles:
                    hit += any(abs(c.i_s - i_s) <= args.tol and abs(c.i_e - i_e) <= args.tol for c in found)
                    total += 1
            print(f"{name:<11} {lo:.1f}-{hi:.1f}s  {hit}/{total} = {hit / total:.3f}  out-of-bounds {bad}")


if __name__ == "__main__":
    main()
