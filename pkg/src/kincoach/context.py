"""Text serialisation of body-measurement and motion-quality contexts.

Layouts (byte-exact)::

    User body: height 1.78 m, mass 73.22 kg, chest 1.00 m, waist 0.83 m, hips 0.98 m.

    Current pose: right knee 85°, left knee 88°.
    Form issues: Right knee flexion insufficient (85° detected, 90° required)

A prompt is ``[warmup]`` (only during warm-up), the motion block, the body
line (or a warning line), and the ``<lang>`` marker, joined by newlines.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal

from .constraints import ConstraintResult
from .preprocess import MorphometricProfile
from .skeleton import SKELETON, dof_motion_name

PROMPT_MARKER = "<lang>"
WARMUP_FLAG = "[warmup]"
NO_BODY_WARNING = "Warning: body measurements unavailable (no shape estimate in window)."
LOW_CONF_WARNING = "Warning: low pose confidence, last valid pose retained."


def round_half_even(x: float, places: int = 2) -> str:
    """Fixed-point string of the shortest decimal literal of ``x``, ties to even."""
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_EVEN))


def render_morph(profile: MorphometricProfile) -> str:
    f = round_half_even
    return (f"User body: height {f(profile.height_m)} m, mass {f(profile.mass_kg)} kg, "
            f"chest {f(profile.chest_m)} m, waist {f(profile.waist_m)} m, hips {f(profile.hip_m)} m.")


def floor_deg(rad: float) -> int:
    return math.floor(math.degrees(rad))


def _fmt_bound(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.1f}"


def pose_state(q, joints) -> list[tuple[str, int]]:
    """(label, floored degrees) of each joint's primary DoF, skeleton order."""
    order = sorted(joints, key=SKELETON.index)
    return [(SKELETON.joint(j).label, floor_deg(q[SKELETON.primary_dof(j)])) for j in order]


def describe_violation(v: ConstraintResult) -> str:
    label = SKELETON.joint(v.joint).label
    motion = dof_motion_name(v.dof)
    insufficient = v.statistic < v.lower
    word = "insufficient" if insufficient else "excessive"
    bound = v.lower if insufficient else v.upper
    detected = v.statistic
    if v.kind == "variance":
        # Reported as a standard deviation so both numbers are in degrees.
        detected, bound = math.sqrt(detected), math.sqrt(bound)
    return f"{label[0].upper()}{label[1:]} {motion} {word} ({math.floor(detected)}° detected, {_fmt_bound(bound)}° required)"


def render_motion(pose, violations) -> str:
    """``pose`` is a list of (label, degrees) pairs as from ``pose_state``."""
    items = ", ".join(f"{label} {deg}°" for label, deg in pose)
    head = f"Current pose: {items}." if pose else "Current pose: none."
    bad = [v for v in sorted(violations, key=lambda v: SKELETON.index(v.joint)) if v.violated]
    issues = "; ".join(describe_violation(v) for v in bad) if bad else "none"
    return f"{head}\nForm issues: {issues}"


@dataclass(frozen=True)
class ContextBundle:
    motion_text: str
    morph_text: str | None
    pose_state: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    t: int = 0
    warmup: bool = False
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"t": self.t, "warmup": self.warmup, "motion_text": self.motion_text,
                "morph_text": self.morph_text, "pose_state": [list(p) for p in self.pose_state],
                "violations": [v.to_dict() for v in self.violations], "warnings": list(self.warnings)}

    @classmethod
    def from_dict(cls, doc: dict) -> "ContextBundle":
        return cls(doc["motion_text"], doc["morph_text"], [tuple(p) for p in doc["pose_state"]],
                   [ConstraintResult.from_dict(v) for v in doc["violations"]], doc["t"], doc["warmup"],
                   tuple(doc.get("warnings", ())))


def build_bundle(t, q, joints, violations, profile=None, warmup=False, low_confidence=False) -> ContextBundle:
    pose = pose_state(q, joints)
    warnings = []
    if profile is None:
        warnings.append(NO_BODY_WARNING)
        morph = None
    else:
        morph = render_morph(profile)
        if low_confidence:
            warnings.append(LOW_CONF_WARNING)
            morph = f"{LOW_CONF_WARNING} {morph}"
    return ContextBundle(render_motion(pose, violations), morph, pose, list(violations), t, warmup, tuple(warnings))


def assemble_prompt(bundle: ContextBundle) -> str:
    lines = [WARMUP_FLAG] if bundle.warmup else []
    lines.append(bundle.motion_text)
    lines.append(bundle.morph_text if bundle.morph_text is not None else NO_BODY_WARNING)
    lines.append(PROMPT_MARKER)
    return "\n".join(lines)


# ------------------------------------------------------------ parse-back

_MORPH_RE = re.compile(
    r"User body: height (?P<height_m>[\d.]+) m, mass (?P<mass_kg>[\d.]+) kg, chest (?P<chest_m>[\d.]+) m, "
    r"waist (?P<waist_m>[\d.]+) m, hips (?P<hip_m>[\d.]+) m\.")
_LABELS = sorted((j.label for j in SKELETON.joints), key=len, reverse=True)
_POSE_RE = re.compile("(" + "|".join(_LABELS) + r") (-?\d+)°")
_ISSUE_RE = re.compile("(" + "|".join(l[0].upper() + l[1:] for l in _LABELS) + ")"
                       r" ([a-z ]+?) (insufficient|excessive) \((-?\d+)° detected, (-?[\d.]+)° required\)")


def parse_morph(text: str) -> dict:
    m = _MORPH_RE.search(text)
    if m is None:
        raise ValueError(f"not a body-measurement line: {text!r}")
    return {k: float(v) for k, v in m.groupdict().items()}


def parse_motion(text: str) -> dict:
    pose_line, issue_line = text.split("\n", 1)
    if not pose_line.startswith("Current pose: ") or not issue_line.startswith("Form issues: "):
        raise ValueError("not a motion-quality block")
    body = pose_line[len("Current pose: "):-1]
    pose = [] if body == "none" else [(a, int(b)) for a, b in _POSE_RE.findall(body)]
    issues = [{"joint": a.lower(), "motion": b, "direction": c, "detected": int(d), "required": float(e)}
              for a, b, c, d, e in _ISSUE_RE.findall(issue_line)]
    return {"pose": pose, "issues": issues}
