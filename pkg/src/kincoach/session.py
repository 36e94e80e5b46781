"""Streaming session engine.

Frames are consumed one at a time. The representative DoF feeds an
incremental cycle detector; every released cycle is time-normalised, scored
against the reference and checked against the exercise's bounds. A
corrective event fires when a released cycle carries at least one violation,
and status events fire at a fixed frame cadence. An event stamped ``t``
depends only on frames up to ``t``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .alignment import quality_score, resample
from .constraints import evaluate_cycle
from .context import ContextBundle, assemble_prompt, build_bundle, describe_violation
from .cycles import SIGMA, StreamingCycleDetector
from .errors import OutOfBand, StreamFormatError
from .preprocess import DEFAULT_STUB, MIN_CONFIDENCE, AngleFrame, gaussian_smooth, make_window, parse_frame_line
from .salience import JointSelection, descriptor, make_selection, select_topk
from .skeleton import FPS, ExerciseConfig, ReferenceTrajectory

STATUS_EVERY = 90  # frames
STREAM_LAG = 15  # frames a cycle end must lie in the past before release
WINDOW_SPAN = 90  # frames of history a 12-frame 4 Hz window can reach
REWRITE_KINDS = ("corrective", "instructional")


@dataclass(frozen=True)
class CycleReport:
    i_s: int
    i_e: int
    rep_index: int
    t_emit: int
    quality: dict
    violations: list

    def to_dict(self) -> dict:
        return {"i_s": self.i_s, "i_e": self.i_e, "rep_index": self.rep_index, "t_emit": self.t_emit,
                "quality": self.quality, "violations": [v.to_dict() for v in self.violations]}


@dataclass(frozen=True)
class FeedbackEvent:
    t: int
    kind: str  # corrective | status
    text: str
    bundle: ContextBundle
    cycle: CycleReport | None = None

    @property
    def time_s(self) -> float:
        return self.t / FPS

    def to_dict(self) -> dict:
        return {"t": self.t, "time_s": self.time_s, "kind": self.kind, "text": self.text,
                "bundle": self.bundle.to_dict(), "cycle": None if self.cycle is None else self.cycle.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def selection_for(cfg: ExerciseConfig, scorer=None, exercises=None, k: int = 12) -> JointSelection:
    """Salient joints from a trained scorer, else the config's table."""
    if scorer is not None and exercises and cfg.exercise_id in exercises:
        return select_topk(scorer.score(descriptor(cfg.exercise_id, exercises)), k)
    joints = cfg.salient_joints or (*cfg.dynamic_joints, *cfg.static_joints)
    return make_selection(joints)


class Session:
    def __init__(self, cfg: ExerciseConfig, ref: ReferenceTrajectory, selection: JointSelection | None = None,
                 status_every: int | None = STATUS_EVERY, lag: int = STREAM_LAG, stub=DEFAULT_STUB):
        self.cfg = cfg
        self.ref = ref
        self.selection = selection or selection_for(cfg)
        self.status_every = status_every
        self.stub = stub
        self.detector = StreamingCycleDetector(cfg, lag=lag, sigma=SIGMA)
        self.frames: list[AngleFrame] = []
        self.q: list[np.ndarray] = []
        self.t0: int | None = None
        self.last_valid: np.ndarray | None = None
        self.low_conf = False
        self.reports: list[CycleReport] = []
        self.events: list[FeedbackEvent] = []
        sel = set(self.selection.joints)
        self.check_joints = [j for j in self.selection.joints if cfg.joint_class(j) is not None]
        dyn = [j for j in cfg.dynamic_joints if j in sel] or [j for j in self.check_joints]
        # A hold has no motion profile to compare against.
        self.quality_dofs = [] if cfg.cycle_mode == "static_hold" else sorted({cfg.primary_dof(j) for j in dyn})

    # ------------------------------------------------------------ input

    def push(self, frame: AngleFrame, line: int | None = None) -> list[FeedbackEvent]:
        if self.t0 is None:
            self.t0 = frame.t
        expected = self.t0 + len(self.frames)
        if frame.t != expected:
            raise StreamFormatError(f"expected frame t={expected}, got t={frame.t}", line)
        q = frame.q
        self.low_conf = frame.confidence < MIN_CONFIDENCE
        if self.low_conf:
            if self.last_valid is not None:
                q = self.last_valid
        else:
            self.last_valid = q
        self.frames.append(frame)
        self.q.append(np.asarray(q, dtype=float))
        out = []
        for c in self.detector.push(q[self.cfg.representative_dof]):
            out.extend(self._on_cycle(c, frame.t))
        if self.status_every and (frame.t - self.t0 + 1) % self.status_every == 0:
            out.append(self._event(frame.t, "status", self.reports[-1] if self.reports else None))
        self.events.extend(out)
        return out

    def finish(self) -> list[FeedbackEvent]:
        """Release cycles still held back by the lag, stamped at the last frame."""
        if not self.frames:
            return []
        t = self.frames[-1].t
        out = []
        for c in self.detector.finish():
            out.extend(self._on_cycle(c, t))
        self.events.extend(out)
        return out

    # --------------------------------------------------------- analysis

    def _on_cycle(self, c, t) -> list[FeedbackEvent]:
        angles = np.stack(self.q)
        smooth = np.column_stack([gaussian_smooth(angles[:, d], SIGMA) for d in range(angles.shape[1])])
        viol = evaluate_cycle(c, smooth, self.ref, self.cfg, self.check_joints)
        quality = {}
        if self.quality_dofs and c.i_e > c.i_s:
            seg = smooth[c.i_s:c.i_e + 1][:, self.quality_dofs]
            aligned = resample(seg, self.ref.n_ref, c.i_s, self.quality_dofs)
            quality = quality_score(aligned, self.ref, self.quality_dofs).to_dict()
        off = self.t0
        viol = [v if v.key_frame is None else replace(v, key_frame=v.key_frame + off) for v in viol]
        rep = CycleReport(c.i_s + off, c.i_e + off, c.rep_index, t, quality, viol)
        self.reports.append(rep)
        if any(v.violated for v in viol):
            return [self._event(t, "corrective", rep)]
        return []

    def _event(self, t, kind, rep: CycleReport | None) -> FeedbackEvent:
        recent = self.frames[-WINDOW_SPAN:]
        win = make_window(recent, t)
        profile = None
        if win.beta_bar is not None:
            try:
                profile = self.stub(win.beta_bar)
            except OutOfBand:
                profile = None
        violations = [v for v in rep.violations if v.violated] if rep else []
        bundle = build_bundle(t, self.q[-1], self.selection.joints, violations, profile,
                              warmup=win.warmup, low_confidence=self.low_conf or win.low_confidence)
        return FeedbackEvent(t, kind, assemble_prompt(bundle), bundle, rep)


def iter_frames(source):
    """AngleFrames from JSON lines or an iterable of frames."""
    for n, item in enumerate(source, 1):
        if isinstance(item, AngleFrame):
            yield n, item
        elif item.strip():
            yield n, parse_frame_line(item, n)


def run_stream(source, cfg: ExerciseConfig, ref: ReferenceTrajectory, selection: JointSelection | None = None,
               finish: bool = True, status_every: int | None = STATUS_EVERY, session: Session | None = None):
    """Run a whole stream; returns (events, session)."""
    s = session or Session(cfg, ref, selection, status_every)
    for n, frame in iter_frames(source):
        s.push(frame, n)
    if finish:
        s.finish()
    return s.events, s


def event_log(events) -> str:
    return "".join(e.to_json() + "\n" for e in events)


# ------------------------------------------------------------ annotation

@dataclass
class AnnotatedEntry:
    t: int
    kind: str
    text: str
    original_text: str
    rewritten: bool = False
    flag: str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = dict(self.extra)
        doc.update(t=self.t, kind=self.kind, text=self.text, original_text=self.original_text,
                   rewritten=self.rewritten)
        if self.flag:
            doc["flag"] = self.flag
        return doc


def annotate_feedback(reports, entries) -> list[AnnotatedEntry]:
    """Rewrite corrective/instructional entries with the violations of the
    latest cycle released at or before each entry's frame. Timestamps and
    other kinds pass through unchanged."""
    reports = sorted(reports, key=lambda r: r.t_emit)
    out = []
    for e in entries:
        t, kind, text = int(e["t"]), e["kind"], e["text"]
        extra = {k: v for k, v in e.items() if k not in ("t", "kind", "text")}
        if kind not in REWRITE_KINDS:
            out.append(AnnotatedEntry(t, kind, text, text, extra=extra))
            continue
        active = [r for r in reports if r.t_emit <= t]
        if not active:
            out.append(AnnotatedEntry(t, kind, text, text, flag="no_active_cycle", extra=extra))
            continue
        bad = [v for v in active[-1].violations if v.violated]
        if not bad:
            out.append(AnnotatedEntry(t, kind, text, text, flag="no_active_violation", extra=extra))
            continue
        new = "; ".join(describe_violation(v) for v in bad)
        out.append(AnnotatedEntry(t, kind, new, text, rewritten=True, extra=extra))
    return out
