import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kincoach.alignment import AlignedCycle, QualityScore, quality_score, resample, similarity_components, warp
from kincoach.errors import BadNRef, DegenerateCycle, DimMismatch

angles = st.floats(-3, 3, allow_nan=False)


def test_identity_resample(rng):
    x = rng.normal(size=(37, 4))
    out = resample(x, 37)
    assert np.max(np.abs(out.angles - x)) <= 1e-12


def test_two_point_cycle():
    assert resample(np.array([0.0, 1.0]), 5).angles[:, 0].tolist() == [0, .25, .5, .75, 1]


def test_dense_oracle(rng):
    x = rng.normal(size=40)
    out = resample(x, 100, i_s=10).angles[:, 0]
    phi = [warp(k, 10, 49, 100) - 10 for k in range(100)]
    assert np.max(np.abs(out - np.interp(phi, np.arange(40), x))) <= 1e-12


def test_warp_hits_ends():
    assert warp(0, 5, 65, 61) == 5 and warp(60, 5, 65, 61) == 65


def test_resample_errors():
    with pytest.raises(DegenerateCycle):
        resample(np.ones(1), 10)
    with pytest.raises(BadNRef):
        resample(np.ones(10), 1)


def _profile(n=61, dofs=3, seed=0):
    rng = np.random.default_rng(seed)
    u = np.linspace(0, 1, n)
    return np.column_stack([rng.uniform(0.2, 1.5) * np.sin(np.pi * u) ** 2 + rng.uniform(-1, 1)
                            for _ in range(dofs)])


def test_identical_scores_one():
    r = _profile()
    q = quality_score(AlignedCycle(r, (0, 1, 2), 0, 60), r)
    assert abs(q.s_cycle - 1.0) <= 1e-9


def test_anticorrelated_scores_point_one():
    r = _profile()
    u = 2 * r.mean(axis=0) - r  # mirrored about the mean, same range of motion
    q = similarity_components(u, r)
    assert q.sim_cos == 0 and q.sim_pearson == 0 and q.sim_vel == 0
    assert q.sim_amp == pytest.approx(1.0, abs=1e-12)
    assert abs(q.s_cycle - 0.1) <= 1e-9


def test_offset_scores_one():
    r = _profile()
    q = similarity_components(r + np.array([0.3, -0.7, 1.1]), r)
    assert abs(q.s_cycle - 1.0) <= 1e-9


def test_constant_columns():
    r = np.ones((20, 2))
    assert similarity_components(r, r + 0.5).s_cycle == pytest.approx(1.0, abs=1e-12)
    ramp = np.column_stack([np.linspace(0, 1, 20)] * 2)
    q = similarity_components(r, ramp)
    assert q.sim_pearson == 0 and q.sim_amp == 0


def test_weights():
    assert QualityScore(1, 0, 0, 0).s_cycle == pytest.approx(0.4)
    assert QualityScore(0, 1, 0, 0).s_cycle == pytest.approx(0.3)
    assert QualityScore(0, 0, 1, 0).s_cycle == pytest.approx(0.2)
    assert QualityScore(0, 0, 0, 1).s_cycle == pytest.approx(0.1)


def test_shape_mismatch():
    with pytest.raises(DimMismatch):
        similarity_components(np.zeros((5, 2)), np.zeros((6, 2)))


@given(arrays(float, (12, 2), elements=angles), arrays(float, (12, 2), elements=angles))
def test_score_bounds_and_symmetry(a, b):
    ab, ba = similarity_components(a, b), similarity_components(b, a)
    assert 0.0 <= ab.s_cycle <= 1.0
    assert ab.s_cycle == pytest.approx(ba.s_cycle, abs=1e-12)


@given(arrays(float, (12, 2), elements=angles), arrays(float, (12, 2), elements=angles),
       st.floats(-2, 2), st.floats(-2, 2))
def test_offset_invariance(a, b, c0, c1):
    base = similarity_components(a, b).s_cycle
    moved = similarity_components(a + np.array([c0, c1]), b).s_cycle
    # Offsets can turn an exactly-constant column into float jitter; skip those.
    if np.all(np.ptp(a, axis=0) > 1e-6) and np.all(np.ptp(b, axis=0) > 1e-6):
        assert moved == pytest.approx(base, abs=1e-9)


def test_quality_uses_selected_dofs(squat_ref):
    ref = squat_ref.angles
    aligned = AlignedCycle(ref[:, [3, 6]].copy(), (3, 6), 0, 60)
    assert quality_score(aligned, squat_ref, (6,)).s_cycle == pytest.approx(1.0, abs=1e-12)
