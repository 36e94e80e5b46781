"""Per-cycle biomechanical constraint checks.

Static joints are judged by the variance of their primary DoF across the
cycle (degrees squared); dynamic joints by their angle at the cycle's key
frame, either absolutely or as deviation from the reference key frame.
A value exactly on a bound passes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCycle, NoKeyFrame
from .skeleton import Constraint


@dataclass(frozen=True)
class ConstraintResult:
    joint: str
    joint_class: str
    kind: str
    dof: int
    statistic: float
    lower: float
    upper: float
    violated: bool
    correction: float
    key_frame: int | None = None

    def to_dict(self) -> dict:
        return {"joint": self.joint, "class": self.joint_class, "kind": self.kind, "dof": self.dof,
                "statistic": self.statistic, "lower": self.lower, "upper": self.upper,
                "violated": self.violated, "correction": self.correction, "key_frame": self.key_frame}

    @classmethod
    def from_dict(cls, doc: dict) -> "ConstraintResult":
        return cls(doc["joint"], doc["class"], doc["kind"], doc["dof"], doc["statistic"], doc["lower"],
                   doc["upper"], doc["violated"], doc["correction"], doc.get("key_frame"))


def violates(delta: float, lower: float, upper: float) -> bool:
    return delta < lower or delta > upper


def correction_to_bound(delta: float, lower: float, upper: float) -> float:
    """Signed change that brings ``delta`` onto the violated bound; 0 inside."""
    if delta < lower:
        return lower - delta
    if delta > upper:
        return upper - delta
    return 0.0


def _result(joint, cls, kind, dof, delta, lower, upper, key=None):
    return ConstraintResult(joint, cls, kind, dof, float(delta), float(lower), float(upper),
                            violates(delta, lower, upper), correction_to_bound(delta, lower, upper), key)


def eval_static(joint: str, cycle, series, dof: int, bound: Constraint | None = None) -> ConstraintResult:
    """Population variance (deg^2) of ``series`` (radians) over the cycle."""
    x = np.asarray(series, dtype=float)[cycle.i_s:cycle.i_e + 1]
    if x.size == 0:
        raise EmptyCycle(f"empty cycle for {joint}")
    lower, upper = (0.0, 25.0) if bound is None else (bound.lower, bound.upper)
    delta = float(np.var(np.degrees(x)))
    return _result(joint, "static", "variance", dof, delta, lower, upper)


def key_frame(series, i_s: int, i_e: int, rule: str) -> int:
    x = np.asarray(series, dtype=float)[i_s:i_e + 1]
    if x.size == 0:
        raise NoKeyFrame(f"no frames in [{i_s}, {i_e}]")
    return i_s + int(np.argmax(x) if rule == "cycle_max" else np.argmin(x))


def eval_dynamic(joint: str, cycle, user, ref, config, bound: Constraint | None = None) -> ConstraintResult:
    """Key-frame check for a dynamic joint.

    ``user`` is the (frames, 46) angle matrix, ``ref`` the (N_ref, 46)
    reference. Key frames are the representative-DoF extremum picked by
    ``config.key_frame_rule`` on each side independently.
    """
    user = np.asarray(user, dtype=float)
    ref = np.asarray(getattr(ref, "angles", ref), dtype=float)
    rep = config.representative_dof
    dof = config.primary_dof(joint)
    bound = bound or config.constraint_for(joint)
    i_key = key_frame(user[:, rep], cycle.i_s, cycle.i_e, config.key_frame_rule)
    angle = math.degrees(user[i_key, dof])
    if bound.kind == "key_frame_angle":
        delta = angle
    else:
        r_key = key_frame(ref[:, rep], 0, ref.shape[0] - 1, config.key_frame_rule)
        delta = abs(angle - math.degrees(ref[r_key, dof]))
    return _result(joint, "dynamic", bound.kind, dof, delta, bound.lower, bound.upper, i_key)


def evaluate_cycle(cycle, user, ref, config, joints) -> list[ConstraintResult]:
    """All applicable checks for ``joints`` (typically the selected set),
    in the given order. Joints that are neither static nor dynamic are skipped."""
    user = np.asarray(user, dtype=float)
    out = []
    for j in joints:
        cls = config.joint_class(j)
        if cls is None:
            continue
        bound = config.constraint_for(j)
        if bound.kind == "variance":
            dof = config.primary_dof(j)
            r = eval_static(j, cycle, user[:, dof], dof, bound)
            out.append(ConstraintResult(r.joint, cls, r.kind, r.dof, r.statistic, r.lower, r.upper,
                                        r.violated, r.correction))
        elif ref is not None or bound.kind == "key_frame_angle":
            out.append(eval_dynamic(j, cycle, user, ref if ref is not None else user, config, bound))
    return out
