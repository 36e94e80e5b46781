import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.signal import find_peaks as scipy_find_peaks
from scipy.signal import peak_prominences

from kincoach.cycles import (CycleRecord, StreamingCycleDetector, best_cycle, detect, detect_static_hold,
                             find_peaks, local_maxima, segment_cycles, segment_phases)
from kincoach.errors import DegenerateCycle, TooShort
from kincoach.generator import generate_session
from kincoach.preprocess import gaussian_smooth
from kincoach.skeleton import resolve_config
from oracles import brute_prominence

eighths = st.integers(-40, 40).map(lambda v: v / 8)


def test_flat_has_no_extrema():
    ps = find_peaks(np.zeros(50))
    assert ps.peaks.size == 0 and ps.valleys.size == 0


def test_too_short():
    with pytest.raises(TooShort):
        find_peaks([1.0, 2.0])


def test_sine_peaks():
    t = np.arange(300)
    x = np.sin(2 * np.pi * t / 60)
    ps = find_peaks(x)
    assert np.array_equal(ps.peaks, 15 + 60 * np.arange(5))
    assert np.allclose(ps.prominences[1:-1], 2.0, atol=1e-12)
    assert np.all(ps.prominences >= 0.1)
    for p, pr in zip(ps.peaks, ps.prominences):
        assert pr == pytest.approx(brute_prominence(x, p), abs=1e-12)


def test_close_equal_peaks_pruned():
    x = np.zeros(30)
    x[10] = 0.5
    x[13] = 0.5
    ps = find_peaks(x)
    assert ps.peaks.tolist() == [10]


@given(arrays(float, st.integers(3, 60), elements=eighths))
def test_local_maxima_match_scipy(x):
    ours = local_maxima(x)
    theirs, _ = scipy_find_peaks(x)
    assert ours.tolist() == theirs.tolist()


@given(arrays(float, st.integers(3, 80), elements=eighths))
def test_prominence_oracles(x):
    ps = find_peaks(x)
    for p, pr in zip(ps.peaks, ps.prominences):
        assert abs(pr - brute_prominence(x, p)) <= 1e-9
    if ps.peaks.size:
        assert np.allclose(ps.prominences, peak_prominences(x, ps.peaks)[0], atol=1e-12)


@given(arrays(float, st.integers(3, 80), elements=eighths))
def test_peak_valley_duality(x):
    a, b = find_peaks(x), find_peaks(-x)
    assert a.valleys.tolist() == b.peaks.tolist()
    assert a.peaks.tolist() == b.valleys.tolist()


@given(arrays(float, st.integers(3, 80), elements=eighths), st.integers(-8, 8))
def test_shift_invariance(x, c):
    a, b = find_peaks(x), find_peaks(x + c)
    assert a.peaks.tolist() == b.peaks.tolist()
    assert a.valleys.tolist() == b.valleys.tolist()


@given(arrays(float, st.integers(3, 80), elements=eighths))
def test_retained_peaks_respect_distance(x):
    ps = find_peaks(x)
    assert np.all(np.diff(ps.peaks) >= 5)
    assert np.all(ps.prominences >= 0.1)


def test_five_squat_reps(squat):
    ses = generate_session(squat, reps=5, seed=0, period_s=2.0)
    cyc = segment_cycles(ses.angles[:, squat.representative_dof], squat)
    assert len(cyc) == 5
    assert all(24 <= c.length <= 150 for c in cyc)
    assert [c.rep_index for c in cyc] == [1, 2, 3, 4, 5]
    for c, (a, b) in zip(cyc, ses.cycles):
        assert abs(c.i_s - a) <= 4 and abs(c.i_e - b) <= 4


def test_short_reps_dropped():
    t = np.arange(180)
    x = -np.cos(2 * np.pi * t / 18)
    assert segment_cycles(x) == []


def test_ramp_has_no_cycles():
    assert segment_cycles(np.linspace(0, 3, 200)) == []


@given(st.integers(0, 10_000))
def test_cycles_ordered_and_disjoint(seed):
    rng = np.random.default_rng(seed)
    x = np.cumsum(rng.normal(0, 0.05, 400)) + np.sin(np.arange(400) / rng.uniform(4, 15))
    cyc = segment_cycles(x)
    for a, b in zip(cyc, cyc[1:]):
        assert a.i_e <= b.i_s
    assert all(24 <= c.length <= 150 for c in cyc)


def test_sine_period_gives_two_phases():
    n = 60
    x = np.sin(2 * np.pi * np.arange(n + 1) / n)
    ph = segment_phases(x, CycleRecord(0, n, "alternating", 1))
    assert [p.side for p in ph] == ["right", "left"]
    assert ph[0].start == 0 and ph[-1].end == n
    assert ph[0].end + 1 == ph[1].start


def test_phases_ignore_offset():
    n = 60
    x = np.sin(2 * np.pi * np.arange(n + 1) / n)
    c = CycleRecord(0, n, "alternating", 1)
    assert segment_phases(x, c) == segment_phases(x + 0.5, c)


def test_slivers_merge():
    # A two-sample dip at the start would be its own phase without merging.
    x = np.concatenate([[-1.0, -1.0], np.ones(20), -np.ones(20)])
    ph = segment_phases(x, CycleRecord(0, 41, "alternating", 1))
    assert len(ph) == 2 and ph[0].start == 0


def test_constant_phase_is_degenerate():
    with pytest.raises(DegenerateCycle):
        segment_phases(np.ones(30), CycleRecord(0, 29, "alternating", 1))


def test_alternating_session_has_phases():
    cfg = resolve_config("high_knees")
    ses = generate_session(cfg, reps=4, seed=1, noise_deg=0.5)
    cyc = segment_cycles(ses.angles[:, cfg.representative_dof], cfg)
    assert len(cyc) == 4
    for c in cyc:
        # Valley-to-valley on pelvis tilt: left raise, right raise, left raise.
        assert [p.side for p in c.phases] == ["left", "right", "left"]


def test_constant_hold():
    holds = detect_static_hold(np.full(200, 0.3))
    assert [(h.i_s, h.i_e) for h in holds] == [(0, 199)]


def test_plateau_in_noise():
    rng = np.random.default_rng(0)
    x = rng.normal(0, 0.3, 200)
    x[70:130] = 0.0
    holds = detect_static_hold(x)
    assert len(holds) == 1
    h = holds[0]
    assert h.i_s <= 75 and h.i_e >= 125
    assert h.i_s >= 60 and h.i_e <= 140


def _blocks(quiet_windows, n_blocks=12):
    parts = []
    for k in range(n_blocks):
        parts.append(np.full(quiet_windows + 9, float(k % 2)))
        parts.append(np.array([3.0, -3.0, 3.0]))
    return np.concatenate(parts)


def test_short_quiet_runs_rejected():
    assert detect_static_hold(_blocks(8)) == []
    assert len(detect_static_hold(_blocks(10))) == 12


def test_hold_too_short_series():
    with pytest.raises(TooShort):
        detect_static_hold(np.zeros(5))


def test_best_cycle_ties_to_earliest():
    assert best_cycle([0.2, 0.9, 0.9, 0.1]) == 1
    assert best_cycle([]) is None


@pytest.mark.parametrize("name,seed", [("squat", 0), ("pushup", 1), ("lunge", 2), ("high_knees", 3), ("squat", 4)])
def test_streaming_matches_batch(name, seed):
    cfg = resolve_config(name)
    ses = generate_session(cfg, reps=6, seed=seed, noise_deg=1.5)
    x = ses.angles[:, cfg.representative_dof]
    det = StreamingCycleDetector(cfg)
    got = []
    for t, v in enumerate(x):
        for c in det.push(v):
            assert c.i_e <= t
            got.append(c)
    got += det.finish()
    assert got == detect(x, cfg)


def test_hold_detection_on_smoothed_series():
    cfg = resolve_config("plank")
    x = np.zeros(300)
    assert [(h.i_s, h.i_e) for h in detect(x, cfg)] == [(0, 299)]
    assert np.allclose(gaussian_smooth(x), 0)
