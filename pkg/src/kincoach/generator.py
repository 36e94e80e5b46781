"""Synthetic reference trajectories and practice sessions.

A repetition is a set of per-DoF bumps over the cycle phase u in [0, 1]:
``rest + (peak - rest) * bump(u)`` with ``bump = cos(pi d / w) ** PROFILE_POWER``
for phase distance ``|d| < w/2`` from the rule centre (wrapping at the cycle
ends). PROFILE_POWER = 2 is the raised cosine. Sessions chain jittered
repetitions, add a short lead-in and lead-out so every rep is bracketed by
valleys, then add iid angle noise. Injected errors are placed so that the
offending rep violates its bound by the planned margin before noise.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadSpec
from .preprocess import N_BETA, AngleFrame
from .skeleton import FPS, N_DOF, ExerciseConfig, ReferenceTrajectory

PROFILE_POWER = 2.0
LENGTH_JITTER = 0.03
AMPLITUDE_JITTER = 0.02
LEAD_PHASE = 0.25  # fraction of a rep traced before the first and after the last valley
MIN_MARGIN = 2.0  # deg beyond the bound
DEFAULT_PERIOD = {"repetitive": 2.0, "alternating": 1.2, "static_hold": 10.0}


def bump(u, center: float = 0.5, width: float = 1.0, power: float = PROFILE_POWER) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    d = (u - center + 0.5) % 1.0 - 0.5
    inside = np.abs(d) < width / 2
    return np.where(inside, np.abs(np.cos(np.pi * d / width)) ** power, 0.0)


def pose_at(cfg: ExerciseConfig, u, amp=None) -> np.ndarray:
    """(len(u), 46) angles in radians at cycle phases ``u``. ``amp`` maps a
    rule index to an amplitude multiplier."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.zeros((u.size, N_DOF))
    for d, deg in cfg.rest_pose_deg.items():
        out[:, d] = deg
    for i, r in enumerate(cfg.motion_rules):
        a = 1.0 if amp is None else amp.get(i, 1.0)
        out[:, r.dof] = r.rest_deg + a * (r.peak_deg - r.rest_deg) * bump(u, r.center, r.width)
    return np.radians(out)


def _rep_rule(cfg: ExerciseConfig):
    for r in cfg.motion_rules:
        if r.dof == cfg.representative_dof:
            return r
    return None


def build_reference(cfg: ExerciseConfig, n_ref: int | None = None) -> ReferenceTrajectory:
    n = cfg.reference_frames if n_ref is None else n_ref
    return ReferenceTrajectory(cfg.exercise_id, pose_at(cfg, np.linspace(0.0, 1.0, n)))


# ------------------------------------------------------------ error plans

@dataclass(frozen=True)
class InjectedError:
    joint: str
    kind: str
    magnitude_deg: float
    reps: tuple[int, ...]  # 1-based
    direction: str = "insufficient"

    def to_dict(self) -> dict:
        return {"joint": self.joint, "kind": self.kind, "magnitude_deg": self.magnitude_deg,
                "reps": list(self.reps), "direction": self.direction}


def parse_error_plan(doc, cfg: ExerciseConfig, reps: int) -> list[InjectedError]:
    if doc is None:
        return []
    if not isinstance(doc, list):
        raise BadSpec("error plan must be a JSON list")
    out = []
    for e in doc:
        try:
            err = InjectedError(e["joint"], e["kind"], float(e["magnitude_deg"]),
                                tuple(int(r) for r in e["reps"]), e.get("direction", "insufficient"))
        except (KeyError, TypeError, ValueError) as exc:
            raise BadSpec(f"bad error entry {e!r}: {exc}") from None
        bound = cfg.constraint_for(err.joint) if cfg.joint_class(err.joint) else None
        if bound is None:
            raise BadSpec(f"{err.joint} is neither static nor dynamic for {cfg.exercise_id}")
        if bound.kind != err.kind:
            raise BadSpec(f"{err.joint} is checked by {bound.kind}, not {err.kind}")
        if err.magnitude_deg < MIN_MARGIN:
            raise BadSpec(f"magnitude {err.magnitude_deg} deg below the {MIN_MARGIN} deg margin")
        if err.direction not in ("insufficient", "excessive"):
            raise BadSpec(f"direction must be insufficient or excessive, got {err.direction!r}")
        if err.kind == "variance" and err.direction != "excessive" and bound.lower <= 0:
            err = InjectedError(err.joint, err.kind, err.magnitude_deg, err.reps, "excessive")
        if any(not 1 <= r <= reps for r in err.reps):
            raise BadSpec(f"error reps {list(err.reps)} outside 1..{reps}")
        out.append(err)
    return out


def load_error_plan(path, cfg: ExerciseConfig, reps: int) -> list[InjectedError]:
    with open(path) as fh:
        return parse_error_plan(json.load(fh), cfg, reps)


# --------------------------------------------------------------- sessions

@dataclass
class SyntheticSession:
    exercise_id: str
    frames: list[AngleFrame]
    cycles: list[tuple[int, int]]  # ground-truth (i_s, i_e) per rep
    errors: list[InjectedError] = field(default_factory=list)
    truth_times: list[float] = field(default_factory=list)  # seconds, one per faulty rep

    @property
    def angles(self) -> np.ndarray:
        return np.stack([f.q for f in self.frames])

    def faulty_reps(self) -> list[int]:
        return sorted({r for e in self.errors for r in e.reps})

    def jsonl(self) -> str:
        return "".join(json.dumps(f.to_dict()) + "\n" for f in self.frames)

    def truth_jsonl(self) -> str:
        return "".join(json.dumps({"time_s": t}) + "\n" for t in self.truth_times)


def _apply_error(cfg, err, seg, u, ref_key_deg):
    """Modify one rep's (frames, 46) radian block ``seg`` in place."""
    bound = cfg.constraint_for(err.joint)
    dof = cfg.primary_dof(err.joint)
    if err.kind == "variance":
        # Slow full-period sway whose std exceeds the bound by the margin.
        std = math.sqrt(bound.upper) + err.magnitude_deg
        seg[:, dof] += math.radians(std * math.sqrt(2.0)) * np.sin(2 * np.pi * u)
        return
    rule = _rep_rule(cfg)
    c, w = (rule.center, rule.width) if rule else (0.5, 1.0)
    shape = bump(u, c, w)
    k = int(np.argmax(shape))
    current = math.degrees(seg[k, dof])
    sign = -1.0 if err.direction == "insufficient" else 1.0
    if err.kind == "key_frame_angle":
        target = bound.lower - err.magnitude_deg if sign < 0 else bound.upper + err.magnitude_deg
    else:
        target = ref_key_deg[dof] + sign * (bound.upper + err.magnitude_deg)
    seg[:, dof] += math.radians(target - current) * shape


def generate_session(cfg: ExerciseConfig, reps: int = 5, errors=None, seed: int = 0,
                     period_s: float | None = None, noise_deg: float = 1.0,
                     confidence: float = 1.0) -> SyntheticSession:
    """Seeded synthetic session. ``errors`` is a parsed plan or the raw JSON list."""
    if reps < 1:
        raise BadSpec("reps must be >= 1")
    if noise_deg < 0:
        raise BadSpec("noise must be non-negative")
    plan = [e if isinstance(e, InjectedError) else None for e in (errors or [])]
    if errors and any(p is None for p in plan):
        plan = parse_error_plan(errors, cfg, reps)
    period = DEFAULT_PERIOD[cfg.cycle_mode] if period_s is None else float(period_s)
    rng = np.random.default_rng(seed)

    if cfg.cycle_mode == "static_hold":
        return _hold_session(cfg, reps, plan, rng, period, noise_deg, confidence)

    rule = _rep_rule(cfg)
    ref_key_deg = np.degrees(pose_at(cfg, np.array([rule.center if rule else 0.5]))[0])
    lengths = [max(2, round(period * FPS * (1 + rng.uniform(-LENGTH_JITTER, LENGTH_JITTER))))
               for _ in range(reps)]
    lead = max(1, round(LEAD_PHASE * period * FPS))
    blocks = [pose_at(cfg, 1.0 - LEAD_PHASE + LEAD_PHASE * np.arange(lead) / lead)]
    starts = []
    pos = lead
    for r, n in enumerate(lengths, 1):
        u = np.arange(n) / n
        amp = {i: 1 + rng.uniform(-AMPLITUDE_JITTER, AMPLITUDE_JITTER) for i in range(len(cfg.motion_rules))}
        seg = pose_at(cfg, u, amp)
        for err in plan:
            if r in err.reps:
                d = cfg.primary_dof(err.joint)
                seg[:, d] = pose_at(cfg, u)[:, d]
                _apply_error(cfg, err, seg, u, ref_key_deg)
        blocks.append(seg)
        starts.append(pos)
        pos += n
    blocks.append(pose_at(cfg, LEAD_PHASE * np.arange(lead + 1) / lead))
    angles = np.concatenate(blocks)
    angles = angles + np.radians(rng.normal(0.0, noise_deg, angles.shape)) if noise_deg else angles
    cycles = [(s, s + n) for s, n in zip(starts, lengths)]
    truth = [cycles[r - 1][1] / FPS for r in sorted({r for e in plan for r in e.reps})]
    return SyntheticSession(cfg.exercise_id, _frames(angles, rng, confidence), cycles, plan, truth)


def _hold_session(cfg, reps, plan, rng, period, noise_deg, confidence):
    """``reps`` consecutive holds of ``period`` seconds; a variance error puts
    a one-second wobble in the middle of the listed holds."""
    n = round(period * FPS)
    angles = np.repeat(pose_at(cfg, np.array([0.0])), n * reps, axis=0)
    truth = []
    for err in plan:
        bound = cfg.constraint_for(err.joint)
        dof = cfg.primary_dof(err.joint)
        amp = math.radians((math.sqrt(bound.upper) + err.magnitude_deg) * math.sqrt(2.0))
        for r in err.reps:
            mid = (r - 1) * n + n // 2
            a, b = mid - FPS // 2, mid + FPS // 2
            angles[a:b, dof] += amp * np.sin(2 * np.pi * np.arange(b - a) / (b - a))
            truth.append(b / FPS)
    angles = angles + np.radians(rng.normal(0.0, noise_deg, angles.shape)) if noise_deg else angles
    cycles = [(r * n, (r + 1) * n - 1) for r in range(reps)]
    return SyntheticSession(cfg.exercise_id, _frames(angles, rng, confidence), cycles, plan, sorted(truth))


def _frames(angles, rng, confidence):
    beta = rng.normal(0.0, 0.5, N_BETA)
    out = []
    for t, q in enumerate(angles):
        b = beta + rng.normal(0.0, 0.02, N_BETA)
        out.append(AngleFrame(t, q, b, confidence))
    return out
