"""Command-line entry point.

Exit codes: 0 success, 2 bad input, 3 internal invariant violated.
``KINCOACH_SEED`` overrides every ``--seed``.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .errors import InputError, InvariantError
from .evaluate import DEFAULT_TOL, read_times, tf_score
from .generator import generate_session, load_error_plan
from .salience import SalienceScorer, descriptor_dataset, train_salience
from .session import STATUS_EVERY, Session, annotate_feedback, run_stream, selection_for
from .skeleton import bundled_exercises, resolve_config, resolve_reference

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 2, 3


def _seed(args) -> int:
    env = os.environ.get("KINCOACH_SEED")
    return int(env) if env not in (None, "") else args.seed


def _open_out(path):
    return contextlib.nullcontext(sys.stdout) if path in (None, "-") else open(path, "w")


def _selection(cfg, path):
    if not path:
        return selection_for(cfg)
    params, meta = load_checkpoint(path, "salience")
    return selection_for(cfg, SalienceScorer.from_params(params), meta.get("exercises"), meta.get("k", 12))


def _session(args):
    cfg = resolve_config(args.exercise)
    ref = resolve_reference(cfg, args.ref)
    status = args.status_every if args.status_every > 0 else None
    return cfg, ref, Session(cfg, ref, _selection(cfg, args.salience), status)


def cmd_analyze(args) -> int:
    cfg, ref, session = _session(args)
    with open(args.stream) as fh:
        events, _ = run_stream(fh, cfg, ref, session=session)
    with _open_out(args.out) as out:
        for e in events:
            out.write(e.to_json() + "\n")
    return EXIT_OK


def cmd_stream(args) -> int:
    cfg, ref, session = _session(args)
    from .session import iter_frames
    for n, frame in iter_frames(sys.stdin):
        for e in session.push(frame, n):
            sys.stdout.write(e.to_json() + "\n")
            sys.stdout.flush()
    for e in session.finish():
        sys.stdout.write(e.to_json() + "\n")
    sys.stdout.flush()
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = resolve_config(args.exercise)
    plan = load_error_plan(args.errors, cfg, args.reps) if args.errors else []
    ses = generate_session(cfg, args.reps, plan, _seed(args), args.period, args.noise)
    with _open_out(args.out) as out:
        out.write(ses.jsonl())
    if args.truth:
        Path(args.truth).write_text(ses.truth_jsonl())
    return EXIT_OK


def cmd_eval(args) -> int:
    with open(args.pred) as fh:
        pred = read_times(fh)
    with open(args.truth) as fh:
        truth = read_times(fh)
    print(json.dumps(tf_score(pred, truth, args.tol).to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_train_salience(args) -> int:
    configs = [resolve_config(e) for e in (args.exercises or bundled_exercises())]
    X, Y, exercises = descriptor_dataset(configs, args.per_exercise, _seed(args))
    scorer = train_salience(X, Y, epochs=args.epochs, lr=args.lr, seed=_seed(args))
    save_checkpoint(args.out, "salience", scorer.params(), {"exercises": exercises, "k": args.k})
    for c in configs:
        sel = selection_for(c, scorer, exercises, args.k)
        print(f"{c.exercise_id}: {' '.join(sel.joints)}")
    return EXIT_OK


def cmd_train_fusion(args) -> int:
    from .fusion import copy_task, evaluate_fusion, train_fusion
    if args.salience:
        load_checkpoint(args.salience, "salience")  # stage one must exist; it stays frozen
    seed = _seed(args)
    train = copy_task(args.train_size, seed=seed)
    test = copy_task(args.test_size, seed=seed + 1)
    model = train_fusion(train, steps=args.steps, lr=args.lr, alpha=args.alpha, seed=seed, heads=args.heads)
    report = evaluate_fusion(model, test)
    save_checkpoint(args.out, "fusion", model.params(), {"heads": args.heads, "alpha": args.alpha, **report})
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_annotate(args) -> int:
    cfg, ref, session = _session(args)
    with open(args.stream) as fh:
        _, s = run_stream(fh, cfg, ref, session=session)
    with open(args.feedback) as fh:
        entries = [json.loads(line) for line in fh if line.strip()]
    with _open_out(args.out) as out:
        for e in annotate_feedback(s.reports, entries):
            out.write(json.dumps(e.to_dict(), sort_keys=True) + "\n")
    return EXIT_OK


def _session_args(p):
    p.add_argument("--exercise", required=True, help="bundled exercise id or config path")
    p.add_argument("--ref", help="reference CSV (default: bundled)")
    p.add_argument("--salience", help="salience checkpoint; default uses the config table")
    p.add_argument("--status-every", type=int, default=STATUS_EVERY, help="frames between status events, 0 = off")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kincoach", description="Streaming biomechanical exercise analysis.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("analyze", help="analyse a frame stream file")
    p.add_argument("--stream", required=True)
    p.add_argument("--out")
    _session_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("stream", help="line-buffered stdin to stdout")
    _session_args(p)
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("gen", help="synthesise a session")
    p.add_argument("--exercise", required=True)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--errors", help="error plan JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--period", type=float, help="seconds per rep (hold length for holds)")
    p.add_argument("--noise", type=float, default=1.0, help="angle noise std, degrees")
    p.add_argument("--out")
    p.add_argument("--truth", help="write ground-truth feedback times here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="temporal F-score of feedback timestamps")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("train-salience", help="train the joint scorer")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--per-exercise", type=int, default=16)
    p.add_argument("--k", type=int, default=12)
    p.add_argument("--exercises", nargs="*")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_salience)

    p = sub.add_parser("train-fusion", help="train the toy fusion block")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--train-size", type=int, default=256)
    p.add_argument("--test-size", type=int, default=128)
    p.add_argument("--salience", help="frozen salience checkpoint from stage one")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_fusion)

    p = sub.add_parser("annotate", help="rewrite corrective feedback with measured violations")
    p.add_argument("--stream", required=True)
    p.add_argument("--feedback", required=True)
    p.add_argument("--out")
    _session_args(p)
    p.set_defaults(func=cmd_annotate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantError as e:
        print(f"kincoach: invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InputError, OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        print(f"kincoach: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
