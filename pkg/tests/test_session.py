import json
import math

import numpy as np
import pytest

from kincoach.context import LOW_CONF_WARNING, parse_motion
from kincoach.errors import StreamFormatError
from kincoach.generator import generate_session
from kincoach.preprocess import AngleFrame
from kincoach.session import Session, annotate_feedback, event_log, run_stream
from kincoach.skeleton import resolve_config, resolve_reference

DEPTH = [{"joint": "knee_r", "kind": "key_frame_angle", "magnitude_deg": 10, "reps": [2, 4]}]


def _corrective(events):
    return [e for e in events if e.kind == "corrective"]


@pytest.fixture(scope="module")
def faulty(squat, squat_ref):
    s = generate_session(squat, 5, DEPTH, seed=3, noise_deg=1.0)
    events, ses = run_stream(s.frames, squat, squat_ref)
    return s, events, ses


def test_clean_session_is_quiet(squat, squat_ref):
    s = generate_session(squat, 6, seed=11, noise_deg=2.0)
    events, ses = run_stream(s.frames, squat, squat_ref)
    assert _corrective(events) == []
    assert len(ses.reports) == 6
    assert all(r.quality["s_cycle"] >= 0.9 for r in ses.reports)
    assert [e.t for e in events if e.kind == "status"] == list(range(89, len(s.frames), 90))


def test_injected_depth_fires_twice(faulty):
    s, events, _ = faulty
    corr = _corrective(events)
    assert len(corr) == 2
    for e, truth in zip(corr, s.truth_times):
        assert 0 <= e.time_s - truth <= 60 / 30
    assert [e.cycle.rep_index for e in corr] == [2, 4]


def test_violation_numbers_rederive_from_bundle(faulty):
    _, events, _ = faulty
    for e in _corrective(events):
        issues = parse_motion(e.bundle.motion_text)["issues"]
        bad = [v for v in e.bundle.violations if v.violated]
        assert len(issues) == len(bad) >= 1
        for text, v in zip(issues, bad):
            assert text["detected"] == math.floor(v.statistic)
            assert text["required"] == (v.lower if v.statistic < v.lower else v.upper)
        assert e.text.endswith("<lang>")
        assert e.cycle.i_s <= bad[0].key_frame <= e.cycle.i_e


def test_events_are_causal(squat, squat_ref, faulty):
    s, events, _ = faulty
    cut = 200
    rng = np.random.default_rng(0)
    tail = [AngleFrame(f.t, f.q + rng.normal(0, 0.3, 46), f.beta, f.confidence) for f in s.frames[cut + 1:]]
    other, _ = run_stream(s.frames[:cut + 1] + tail, squat, squat_ref)
    early = lambda ev: [e.to_json() for e in ev if e.t <= cut]
    assert early(events) == early(other)


def test_prefix_replay(squat, squat_ref, faulty):
    s, events, _ = faulty
    for cut in (120, 250, len(s.frames) - 1):
        part, _ = run_stream(s.frames[:cut + 1], squat, squat_ref, finish=False)
        assert [e.to_json() for e in part] == [e.to_json() for e in events if e.t <= cut]


def test_deterministic_log(squat, squat_ref, faulty):
    s, events, _ = faulty
    again, _ = run_stream(s.jsonl().splitlines(), squat, squat_ref)
    assert event_log(again) == event_log(events)
    for line in event_log(events).splitlines():
        doc = json.loads(line)
        assert doc["kind"] in ("corrective", "status") and doc["time_s"] == doc["t"] / 30


def test_stream_gaps_rejected(squat, squat_ref):
    frames = generate_session(squat, 1, seed=0).frames
    with pytest.raises(StreamFormatError):
        run_stream(frames[:5] + frames[6:], squat, squat_ref)
    with pytest.raises(StreamFormatError):
        run_stream([json.dumps(frames[0].to_dict()), "{not json"], squat, squat_ref)


def test_low_confidence_reuses_last_pose(squat, squat_ref):
    s = generate_session(squat, 2, seed=0)
    frames = list(s.frames)
    for t in range(80, 95):
        f = frames[t]
        frames[t] = AngleFrame(f.t, np.zeros(46), f.beta, 0.1)
    ses = Session(squat, squat_ref)
    for f in frames:
        ses.push(f)
    assert np.array_equal(ses.q[89], frames[79].q)
    status = [e for e in ses.events if e.t == 89][0]
    assert LOW_CONF_WARNING in status.bundle.warnings


def test_plank_runs_without_quality():
    plank = resolve_config("plank")
    s = generate_session(plank, 1, seed=0)
    _, ses = run_stream(s.frames, plank, resolve_reference(plank))
    assert ses.reports and all(r.quality == {} for r in ses.reports)


def test_annotate(faulty):
    s, events, ses = faulty
    first = _corrective(events)[0]
    entries = [
        {"t": 0, "kind": "corrective", "text": "go deeper"},
        {"t": first.t, "kind": "corrective", "text": "go deeper", "speaker": "coach"},
        {"t": first.t + 1, "kind": "motivational", "text": "nice"},
    ]
    out = annotate_feedback(ses.reports, entries)
    assert out[0].flag == "no_active_cycle" and out[0].text == "go deeper"
    assert out[1].rewritten and out[1].text.startswith("Right knee flexion insufficient")
    assert out[1].to_dict()["speaker"] == "coach" and out[1].t == first.t
    assert not out[2].rewritten and out[2].text == "nice" and out[2].flag is None


def test_annotate_clean_cycle_flag(squat, squat_ref):
    s = generate_session(squat, 3, seed=5)
    _, ses = run_stream(s.frames, squat, squat_ref)
    out = annotate_feedback(ses.reports, [{"t": len(s.frames) - 1, "kind": "instructional", "text": "x"}])
    assert out[0].flag == "no_active_violation"


@pytest.mark.parametrize("direction", ["insufficient", "excessive"])
def test_alternating_deviation_detected(direction):
    cfg = resolve_config("high_knees")
    plan = [{"joint": "knee_r", "kind": "deviation", "magnitude_deg": 8, "reps": [3, 6], "direction": direction}]
    s = generate_session(cfg, 8, plan, seed=4)
    events, _ = run_stream(s.frames, cfg, resolve_reference(cfg), status_every=None)
    assert sorted(e.cycle.rep_index for e in _corrective(events)) == [3, 6]
