"""Regenerate the bundled reference trajectories from the exercise configs."""
import argparse
from pathlib import Path

from kincoach.generator import build_reference
from kincoach.skeleton import bundled_exercises, bundled_reference_path, resolve_config, save_reference


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, help="default: the package data directory")
    args = ap.parse_args()
    for name in bundled_exercises():
        cfg = resolve_config(name)
        path = bundled_reference_path(cfg.reference_id)
        if args.out_dir:
            path = args.out_dir / path.name
        save_reference(build_reference(cfg), path)
        print(f"{name}: {cfg.reference_frames} frames -> {path}")


if __name__ == "__main__":
    main()
