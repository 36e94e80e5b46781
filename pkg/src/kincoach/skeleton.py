"""Skeletal DoF layout, exercise configuration and reference trajectories.

The pose vector has 46 Euler-angle DoFs grouped into 24 anatomical joints.
All angles are radians internally; exercise-config bounds are statistic
bounds in degrees (or degrees squared for variance) and stay that way,
because constraint statistics are reported in those units.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvertedBound, SchemaError, UnknownJoint

N_DOF = 46
N_JOINTS = 24
FPS = 30
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Joint:
    name: str
    label: str  # human-readable, e.g. "right knee"
    side: str  # "R", "L" or "C"
    dofs: tuple[int, ...]


# (name, label, side, [dof names]) in skeleton order; DoF indices are assigned
# consecutively so the blocks reproduce the pelvis 0-2 / right leg 3-9 /
# left leg 10-16 / spine 17-25 / right arm 26-35 / left arm 36-45 layout.
_LAYOUT = [
    ("pelvis", "pelvis", "C", ["tilt", "list", "rotation"]),
    ("hip_r", "right hip", "R", ["flexion", "adduction", "rotation"]),
    ("knee_r", "right knee", "R", ["flexion"]),
    ("ankle_r", "right ankle", "R", ["dorsiflexion"]),
    ("subtalar_r", "right subtalar", "R", ["inversion"]),
    ("mtp_r", "right toes", "R", ["flexion"]),
    ("hip_l", "left hip", "L", ["flexion", "adduction", "rotation"]),
    ("knee_l", "left knee", "L", ["flexion"]),
    ("ankle_l", "left ankle", "L", ["dorsiflexion"]),
    ("subtalar_l", "left subtalar", "L", ["inversion"]),
    ("mtp_l", "left toes", "L", ["flexion"]),
    ("lumbar", "lumbar spine", "C", ["bending", "extension", "twist"]),
    ("thorax", "thorax", "C", ["bending", "extension", "twist"]),
    ("head", "head", "C", ["bending", "extension", "twist"]),
    ("scapula_r", "right scapula", "R", ["abduction", "elevation", "upward rotation"]),
    ("shoulder_r", "right shoulder", "R", ["flexion", "abduction", "rotation"]),
    ("elbow_r", "right elbow", "R", ["flexion"]),
    ("forearm_r", "right forearm", "R", ["pronation"]),
    ("wrist_r", "right wrist", "R", ["flexion", "deviation"]),
    ("scapula_l", "left scapula", "L", ["abduction", "elevation", "upward rotation"]),
    ("shoulder_l", "left shoulder", "L", ["flexion", "abduction", "rotation"]),
    ("elbow_l", "left elbow", "L", ["flexion"]),
    ("forearm_l", "left forearm", "L", ["pronation"]),
    ("wrist_l", "left wrist", "L", ["flexion", "deviation"]),
]


@dataclass(frozen=True)
class SkeletonModel:
    joints: tuple[Joint, ...]
    dof_names: tuple[str, ...]
    dof_units: tuple[str, ...]

    def __post_init__(self):
        seen = sorted(i for j in self.joints for i in j.dofs)
        if seen != list(range(N_DOF)) or len(self.joints) != N_JOINTS:
            raise ValueError("joint DoF sets must partition 0..45")
        object.__setattr__(self, "_by_name", {j.name: k for k, j in enumerate(self.joints)})

    def index(self, joint: str) -> int:
        try:
            return self._by_name[joint]
        except KeyError:
            raise UnknownJoint(f"unknown joint {joint!r}") from None

    def joint(self, joint: str) -> Joint:
        return self.joints[self.index(joint)]

    def dof_set(self, joint: str) -> tuple[int, ...]:
        return self.joint(joint).dofs

    def primary_dof(self, joint: str) -> int:
        # First DoF of the block; for hip/knee/shoulder/elbow that is flexion.
        return self.joint(joint).dofs[0]

    def dof_label(self, dof: int) -> str:
        return self.dof_names[dof]

    def expand(self, joints) -> list[int]:
        return sorted(i for j in joints for i in self.dof_set(j))

    @property
    def names(self) -> list[str]:
        return [j.name for j in self.joints]


def _build_skeleton() -> SkeletonModel:
    joints, names = [], []
    start = 0
    for name, label, side, dnames in _LAYOUT:
        idx = tuple(range(start, start + len(dnames)))
        joints.append(Joint(name, label, side, idx))
        names.extend(f"{name}.{d}" for d in dnames)
        start += len(dnames)
    return SkeletonModel(tuple(joints), tuple(names), ("rad",) * N_DOF)


SKELETON = _build_skeleton()


def primary_dof(joint: str) -> int:
    """Index of the DoF used for cycle detection and key-frame statistics."""
    return SKELETON.primary_dof(joint)


def dof_motion_name(dof: int) -> str:
    """Short motion name of a DoF, e.g. ``flexion`` for index 6."""
    return SKELETON.dof_names[dof].split(".", 1)[1]


# ---------------------------------------------------------------- config

CYCLE_MODES = ("repetitive", "alternating", "static_hold")
KEY_FRAME_RULES = ("cycle_min", "cycle_max")
CONSTRAINT_KINDS = ("variance", "key_frame_angle", "deviation")

STATIC_VARIANCE_BOUND = 25.0  # deg^2, i.e. std below 5 deg
FLEXION_TOLERANCE = 5.0
DEFAULT_TOLERANCE = 10.0


@dataclass(frozen=True)
class Constraint:
    joint: str
    kind: str
    lower: float
    upper: float

    @property
    def units(self) -> str:
        return "deg2" if self.kind == "variance" else "deg"


@dataclass(frozen=True)
class MotionRule:
    """Reference-generation rule for one DoF: a raised-cosine bump from
    ``rest_deg`` to ``peak_deg`` centred at phase ``center`` with support
    ``width`` (both in cycle fractions)."""
    joint: str
    dof: int
    rest_deg: float
    peak_deg: float
    center: float = 0.5
    width: float = 1.0


@dataclass(frozen=True)
class ExerciseConfig:
    exercise_id: str
    cycle_mode: str
    representative_joint: str
    static_joints: tuple[str, ...]
    dynamic_joints: tuple[str, ...]
    constraints: tuple[Constraint, ...] = ()
    key_frame_rule: str = "cycle_max"
    reference_id: str = ""
    salient_joints: tuple[str, ...] = ()
    motion_rules: tuple[MotionRule, ...] = ()
    rest_pose_deg: dict = field(default_factory=dict)
    primary_dof_overrides: dict = field(default_factory=dict)
    reference_frames: int = 61
    description: str = ""

    def primary_dof(self, joint: str) -> int:
        if joint in self.primary_dof_overrides:
            return self.primary_dof_overrides[joint]
        return SKELETON.primary_dof(joint)

    @property
    def representative_dof(self) -> int:
        return self.primary_dof(self.representative_joint)

    def joint_class(self, joint: str) -> str | None:
        if joint in self.static_joints:
            return "static"
        if joint in self.dynamic_joints:
            return "dynamic"
        return None

    def constraint_for(self, joint: str) -> Constraint | None:
        """Explicit constraint for ``joint`` or the class default."""
        for c in self.constraints:
            if c.joint == joint:
                return c
        cls = self.joint_class(joint)
        if cls == "static":
            return Constraint(joint, "variance", 0.0, STATIC_VARIANCE_BOUND)
        if cls == "dynamic":
            tol = DEFAULT_TOLERANCE
            dof = self.primary_dof(joint)
            if joint.split("_")[0] in ("knee", "elbow", "hip") and dof_motion_name(dof) == "flexion":
                tol = FLEXION_TOLERANCE
            return Constraint(joint, "deviation", 0.0, tol)
        return None


def _require(doc, key, kind=None):
    if key not in doc:
        raise SchemaError(f"missing field {key!r}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise SchemaError(f"field {key!r} has wrong type {type(val).__name__}")
    return val


def _joint(name):
    if not isinstance(name, str):
        raise SchemaError(f"joint id must be a string, got {name!r}")
    SKELETON.index(name)
    return name


def _number(doc, key, default=None):
    val = doc.get(key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise SchemaError(f"field {key!r} must be a finite number")
    return float(val)


def config_from_dict(doc: dict) -> ExerciseConfig:
    if not isinstance(doc, dict):
        raise SchemaError("config must be a JSON object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema {doc.get('schema')!r}")
    mode = _require(doc, "cycle_mode", str)
    if mode not in CYCLE_MODES:
        raise SchemaError(f"cycle_mode must be one of {CYCLE_MODES}")
    rule = doc.get("key_frame_rule", "cycle_max")
    if rule not in KEY_FRAME_RULES:
        raise SchemaError(f"key_frame_rule must be one of {KEY_FRAME_RULES}")
    static = tuple(_joint(j) for j in _require(doc, "static_joints", list))
    dynamic = tuple(_joint(j) for j in _require(doc, "dynamic_joints", list))
    if set(static) & set(dynamic):
        raise SchemaError(f"joints both static and dynamic: {sorted(set(static) & set(dynamic))}")

    overrides = {}
    for j, d in doc.get("primary_dof", {}).items():
        _joint(j)
        if d not in SKELETON.dof_set(j):
            raise SchemaError(f"primary_dof {d} not in DoF set of {j}")
        overrides[j] = int(d)

    constraints = []
    for c in doc.get("constraints", []):
        kind = _require(c, "kind", str)
        if kind not in CONSTRAINT_KINDS:
            raise SchemaError(f"constraint kind must be one of {CONSTRAINT_KINDS}")
        lo, hi = _number(c, "lower", 0.0), _number(c, "upper")
        joint = _joint(_require(c, "joint"))
        if lo > hi:
            raise InvertedBound(f"{joint}: lower bound {lo} > upper bound {hi}")
        constraints.append(Constraint(joint, kind, lo, hi))

    rules = []
    for r in doc.get("motion_rules", []):
        joint = _joint(_require(r, "joint"))
        dof = r.get("dof", overrides.get(joint, SKELETON.primary_dof(joint)))
        if dof not in SKELETON.dof_set(joint):
            raise SchemaError(f"motion rule dof {dof} not in DoF set of {joint}")
        rules.append(MotionRule(joint, int(dof), _number(r, "rest_deg"), _number(r, "peak_deg"),
                                _number(r, "center", 0.5), _number(r, "width", 1.0)))

    rest = {}
    for k, v in doc.get("rest_pose_deg", {}).items():
        i = int(k)
        if not 0 <= i < N_DOF:
            raise SchemaError(f"rest pose DoF {k} out of range")
        rest[i] = float(v)

    n_ref = int(doc.get("reference_frames", 61))
    if not 24 <= n_ref <= 150:
        raise SchemaError("reference_frames must lie in [24, 150]")

    return ExerciseConfig(
        exercise_id=_require(doc, "exercise_id", str),
        cycle_mode=mode,
        representative_joint=_joint(_require(doc, "representative_joint")),
        static_joints=static,
        dynamic_joints=dynamic,
        constraints=tuple(constraints),
        key_frame_rule=rule,
        reference_id=doc.get("reference_id", doc["exercise_id"]),
        salient_joints=tuple(_joint(j) for j in doc.get("salient_joints", [])),
        motion_rules=tuple(rules),
        rest_pose_deg=rest,
        primary_dof_overrides=overrides,
        reference_frames=n_ref,
        description=doc.get("description", ""),
    )


def config_to_dict(cfg: ExerciseConfig) -> dict:
    doc = {
        "schema": SCHEMA_VERSION,
        "exercise_id": cfg.exercise_id,
        "description": cfg.description,
        "cycle_mode": cfg.cycle_mode,
        "representative_joint": cfg.representative_joint,
        "key_frame_rule": cfg.key_frame_rule,
        "reference_id": cfg.reference_id,
        "reference_frames": cfg.reference_frames,
        "static_joints": list(cfg.static_joints),
        "dynamic_joints": list(cfg.dynamic_joints),
        "salient_joints": list(cfg.salient_joints),
        "constraints": [{"joint": c.joint, "kind": c.kind, "lower": c.lower, "upper": c.upper}
                        for c in cfg.constraints],
        "motion_rules": [{"joint": r.joint, "dof": r.dof, "rest_deg": r.rest_deg, "peak_deg": r.peak_deg,
                          "center": r.center, "width": r.width} for r in cfg.motion_rules],
        "rest_pose_deg": {str(k): v for k, v in sorted(cfg.rest_pose_deg.items())},
    }
    if cfg.primary_dof_overrides:
        doc["primary_dof"] = dict(sorted(cfg.primary_dof_overrides.items()))
    return doc


def dump_exercise_config(cfg: ExerciseConfig) -> str:
    """Canonical serialization: sorted keys, two-space indent, trailing newline."""
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def load_exercise_config(path) -> ExerciseConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: {e}") from None
    return config_from_dict(doc)


# ------------------------------------------------------------- references

@dataclass(frozen=True)
class ReferenceTrajectory:
    exercise_id: str
    angles: np.ndarray  # (N_ref, 46) radians
    fps: int = FPS

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        if a.ndim != 2 or a.shape[1] != N_DOF:
            raise SchemaError(f"reference must be N x {N_DOF}, got {a.shape}")
        if not 24 <= a.shape[0] <= 150:
            raise SchemaError(f"reference length {a.shape[0]} outside [24, 150]")
        if not np.all(np.isfinite(a)):
            raise SchemaError("reference contains non-finite angles")
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    @property
    def n_ref(self) -> int:
        return self.angles.shape[0]


CSV_HEADER = ["frame"] + [f"dof_{i:02d}" for i in range(N_DOF)]


def save_reference(ref: ReferenceTrajectory, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for k, row in enumerate(ref.angles):
            w.writerow([k] + [repr(float(v)) for v in row])
    path.with_suffix(".json").write_text(
        json.dumps({"exercise_id": ref.exercise_id, "fps": ref.fps}, sort_keys=True) + "\n")


def load_reference(path) -> ReferenceTrajectory:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise SchemaError(f"{path}: bad reference header")
    try:
        angles = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=float)
    except ValueError as e:
        raise SchemaError(f"{path}: {e}") from None
    side = path.with_suffix(".json")
    meta = json.loads(side.read_text()) if side.exists() else {}
    if meta.get("fps", FPS) != FPS:
        raise SchemaError(f"{path}: reference fps must be {FPS}")
    return ReferenceTrajectory(meta.get("exercise_id", path.stem.removesuffix("_ref")), angles)


# ----------------------------------------------------------- bundled data

def _data_dir() -> Path:
    return Path(str(resources.files("kincoach") / "data"))


def bundled_exercises() -> list[str]:
    return sorted(p.stem for p in (_data_dir() / "exercises").glob("*.json"))


def resolve_config(name_or_path) -> ExerciseConfig:
    p = Path(name_or_path)
    if p.suffix == ".json" and p.exists():
        return load_exercise_config(p)
    bundled = _data_dir() / "exercises" / f"{name_or_path}.json"
    if not bundled.exists():
        raise SchemaError(f"no exercise config {name_or_path!r}")
    return load_exercise_config(bundled)


def bundled_reference_path(reference_id: str) -> Path:
    return _data_dir() / "references" / f"{reference_id}_ref.csv"


def resolve_reference(cfg: ExerciseConfig, path=None) -> ReferenceTrajectory:
    if path is not None:
        return load_reference(path)
    p = bundled_reference_path(cfg.reference_id)
    if p.exists():
        return load_reference(p)
    from .generator import build_reference
    return build_reference(cfg)
