import math

import numpy as np
import pytest

from kincoach.alignment import quality_score, resample
from kincoach.constraints import evaluate_cycle
from kincoach.cycles import CycleRecord, detect
from kincoach.errors import BadSpec
from kincoach.generator import bump, build_reference, generate_session, parse_error_plan
from kincoach.preprocess import gaussian_smooth
from kincoach.skeleton import resolve_config, resolve_reference

DEPTH = [{"joint": "knee_r", "kind": "key_frame_angle", "magnitude_deg": 10, "reps": [2, 4]}]


def test_bump_shape():
    u = np.linspace(0, 1, 101)
    b = bump(u, 0.5, 1.0)
    assert b[50] == pytest.approx(1.0) and b[0] == pytest.approx(0.0, abs=1e-30)
    assert np.allclose(b, b[::-1])
    # wraps across the cycle ends
    assert bump(0.95, 0.0, 0.2) == pytest.approx(bump(0.05, 0.0, 0.2))


def test_deterministic(squat):
    a = generate_session(squat, 4, DEPTH, seed=7)
    b = generate_session(squat, 4, DEPTH, seed=7)
    assert a.jsonl() == b.jsonl() and a.truth_jsonl() == b.truth_jsonl()
    assert generate_session(squat, 4, seed=8).jsonl() != a.jsonl()


def test_reference_matches_bundled(squat, squat_ref):
    assert np.allclose(build_reference(squat).angles, squat_ref.angles, atol=1e-9)


def test_clean_reps_recovered(squat, squat_ref):
    s = generate_session(squat, 5, seed=0, period_s=2.0)
    found = detect(s.angles[:, squat.representative_dof], squat)
    assert len(found) == 5
    for c, (i_s, i_e) in zip(found, s.cycles):
        assert 24 <= c.length <= 150
        assert abs(c.i_s - i_s) <= 4 and abs(c.i_e - i_e) <= 4
    smooth = gaussian_smooth(s.angles[:, 6])
    for c in found:
        q = quality_score(resample(smooth[c.i_s:c.i_e + 1], squat_ref.n_ref, c.i_s, [6]), squat_ref, [6])
        assert q.s_cycle >= 0.9


@pytest.mark.parametrize("doc", [
    [{"joint": "wrist_r", "kind": "key_frame_angle", "magnitude_deg": 5, "reps": [1]}],  # not classified
    [{"joint": "knee_r", "kind": "variance", "magnitude_deg": 5, "reps": [1]}],  # wrong kind
    [{"joint": "knee_r", "kind": "key_frame_angle", "magnitude_deg": 1, "reps": [1]}],  # below margin
    [{"joint": "knee_r", "kind": "key_frame_angle", "magnitude_deg": 5, "reps": [9]}],  # rep out of range
    [{"joint": "knee_r", "kind": "key_frame_angle", "magnitude_deg": 5, "reps": [1], "direction": "up"}],
    [{"joint": "knee_r"}],
    {"joint": "knee_r"},
])
def test_bad_plans(squat, doc):
    with pytest.raises(BadSpec):
        parse_error_plan(doc, squat, 5)


def test_bad_session_args(squat):
    with pytest.raises(BadSpec):
        generate_session(squat, 0)
    with pytest.raises(BadSpec):
        generate_session(squat, 3, noise_deg=-1)


def test_variance_direction_forced():
    plank = resolve_config("plank")
    plan = parse_error_plan([{"joint": "hip_r", "kind": "variance", "magnitude_deg": 3, "reps": [1]}], plank, 1)
    assert plan[0].direction == "excessive"


@pytest.mark.parametrize("direction", ["insufficient", "excessive"])
def test_injected_depth_hits_target(squat, squat_ref, direction):
    doc = [dict(DEPTH[0], direction=direction)]
    s = generate_session(squat, 5, doc, seed=1, noise_deg=0.0)
    bound = squat.constraint_for("knee_r")
    for r, (i_s, i_e) in enumerate(s.cycles, 1):
        peak = math.degrees(s.angles[i_s:i_e + 1, 6].max())
        if r in (2, 4):
            want = bound.lower - 10 if direction == "insufficient" else bound.upper + 10
            assert peak == pytest.approx(want, abs=1e-6)
        else:
            assert bound.lower < peak < bound.upper
    assert s.faulty_reps() == [2, 4]
    assert s.truth_times == [s.cycles[1][1] / 30, s.cycles[3][1] / 30]


def test_injected_errors_violate_after_smoothing(squat, squat_ref):
    s = generate_session(squat, 5, DEPTH, seed=2, noise_deg=1.0)
    smooth = np.column_stack([gaussian_smooth(s.angles[:, d]) for d in range(46)])
    for r, (i_s, i_e) in enumerate(s.cycles, 1):
        res = evaluate_cycle(CycleRecord(i_s, i_e, "repetitive", r), smooth, squat_ref, squat, ["knee_r"])
        assert res[0].violated == (r in (2, 4))


def test_hold_wobble_breaks_the_hold():
    plank = resolve_config("plank")
    s = generate_session(plank, 1, [{"joint": "hip_r", "kind": "variance", "magnitude_deg": 4, "reps": [1]}])
    mid = len(s.frames) // 2
    for h in detect(s.angles[:, plank.representative_dof], plank):
        assert h.i_e < mid - 15 or h.i_s >= mid + 15
    assert s.truth_times == [(mid + 15) / 30]


def test_every_exercise_generates():
    for ex in ("squat", "pushup", "plank", "lunge", "high_knees"):
        cfg = resolve_config(ex)
        s = generate_session(cfg, 3, seed=0)
        assert s.angles.shape[1] == 46 and np.all(np.isfinite(s.angles))
        assert resolve_reference(cfg).n_ref == cfg.reference_frames
