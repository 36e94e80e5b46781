"""Time normalisation of user cycles and the cycle quality score."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadNRef, DegenerateCycle, DimMismatch

WEIGHTS = (0.4, 0.3, 0.2, 0.1)  # cosine, pearson, velocity, amplitude


@dataclass(frozen=True)
class AlignedCycle:
    angles: np.ndarray  # (N_ref, n_dofs)
    dofs: tuple[int, ...]
    i_s: int
    i_e: int

    @property
    def n_ref(self) -> int:
        return self.angles.shape[0]

    def phi(self, k: int) -> float:
        return warp(k, self.i_s, self.i_e, self.n_ref)


@dataclass(frozen=True)
class QualityScore:
    sim_cos: float
    sim_pearson: float
    sim_vel: float
    sim_amp: float

    @property
    def s_cycle(self) -> float:
        s = (WEIGHTS[0] * self.sim_cos + WEIGHTS[1] * self.sim_pearson
             + WEIGHTS[2] * self.sim_vel + WEIGHTS[3] * self.sim_amp)
        return min(1.0, max(0.0, s))

    def to_dict(self) -> dict:
        return {"sim_cos": self.sim_cos, "sim_pearson": self.sim_pearson, "sim_vel": self.sim_vel,
                "sim_amp": self.sim_amp, "s_cycle": self.s_cycle}


def warp(k: int, i_s: int, i_e: int, n_ref: int) -> float:
    """Cycle-timeline position of reference index k (0-based); hits both ends."""
    return i_s + k * (i_e - i_s) / (n_ref - 1)


def resample(cycle, n_ref: int, i_s: int = 0, dofs=None) -> AlignedCycle:
    """Linearly resample a cycle to ``n_ref`` samples.

    ``cycle`` holds the user's frames i_s..i_e as rows (1-D input is one DoF).
    Each output row k blends the floor and ceil source rows of the warped
    position.
    """
    x = np.asarray(cycle, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if n_ref < 2:
        raise BadNRef(f"N_ref must be >= 2, got {n_ref}")
    if x.shape[0] < 2:
        raise DegenerateCycle("cycle needs i_e > i_s")
    length = x.shape[0]
    out = np.empty((n_ref, x.shape[1]))
    for k in range(n_ref):
        pos = k * (length - 1) / (n_ref - 1)
        lo = int(np.floor(pos))
        hi = int(np.ceil(pos))
        frac = pos - lo
        out[k] = x[lo] + frac * (x[hi] - x[lo])
    if dofs is None:
        dofs = tuple(range(x.shape[1]))
    return AlignedCycle(out, tuple(dofs), i_s, i_s + length - 1)


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, float(v)))


def _zscore_cols(a: np.ndarray) -> np.ndarray:
    mu = a.mean(axis=0)
    sd = a.std(axis=0)
    out = np.zeros_like(a)
    ok = sd > 0
    out[:, ok] = (a[:, ok] - mu[ok]) / sd[ok]
    return out


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 and nv == 0:
        return 1.0
    if nu == 0 or nv == 0:
        return 0.0
    return float(u @ v / (nu * nv))


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    ca, cb = a - a.mean(), b - b.mean()
    na, nb = np.sqrt(ca @ ca), np.sqrt(cb @ cb)
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(ca @ cb / (na * nb), -1.0, 1.0))


def _rom_ratio(a: np.ndarray, b: np.ndarray) -> float:
    ra, rb = np.ptp(a), np.ptp(b)
    lo, hi = min(ra, rb), max(ra, rb)
    if hi == 0:
        return 1.0
    return float(lo / hi)


def similarity_components(user: np.ndarray, ref: np.ndarray) -> QualityScore:
    """Four similarities between equal-shape (N, n_dofs) angle matrices."""
    user = np.asarray(user, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if user.shape != ref.shape:
        raise DimMismatch(f"user {user.shape} vs reference {ref.shape}")
    if user.ndim == 1:
        user, ref = user[:, None], ref[:, None]
    cos = _cosine(_zscore_cols(user).ravel(order="F"), _zscore_cols(ref).ravel(order="F"))
    pear = np.mean([_pearson(user[:, c], ref[:, c]) for c in range(user.shape[1])])
    du, dr = np.diff(user, axis=0), np.diff(ref, axis=0)
    vel = _cosine(_zscore_cols(du).ravel(order="F"), _zscore_cols(dr).ravel(order="F"))
    amp = np.mean([_rom_ratio(user[:, c], ref[:, c]) for c in range(user.shape[1])])
    return QualityScore(_clamp01(cos), _clamp01(pear), _clamp01(vel), _clamp01(amp))


def quality_score(aligned: AlignedCycle, ref, dofs=None) -> QualityScore:
    """Score an aligned cycle against a reference trajectory.

    ``ref`` is a ReferenceTrajectory (or an (N_ref, 46) array); ``dofs``
    selects which of the aligned cycle's DoFs enter the score.
    """
    ref_angles = getattr(ref, "angles", ref)
    ref_angles = np.asarray(ref_angles, dtype=float)
    if dofs is None:
        dofs = aligned.dofs
    cols = [aligned.dofs.index(d) for d in dofs]
    if ref_angles.shape[0] != aligned.n_ref:
        raise DimMismatch(f"reference has {ref_angles.shape[0]} frames, cycle {aligned.n_ref}")
    return similarity_components(aligned.angles[:, cols], ref_angles[:, list(dofs)])
