"""Repetition cycle detection on a single joint-angle trajectory.

Peaks and valleys come from topographic prominence; a repetition is a
valley-to-valley span containing exactly one retained peak. Alternating
exercises split each cycle into left/right phases at zero crossings of the
mean-removed signal; isometric holds are runs of low rolling deviation.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateCycle, TooShort
from .preprocess import gaussian_smooth

SIGMA = 2.0
P_MIN = 0.1  # rad
D_MIN = 5  # frames
MIN_CYCLE = 24  # frames, 0.8 s at 30 fps
MAX_CYCLE = 150  # frames, 5.0 s
HOLD_WINDOW = 10
HOLD_MIN_LEN = 10
HOLD_PERCENTILE = 30.0
MIN_SLIVER = 3


@dataclass(frozen=True)
class Phase:
    start: int
    end: int
    side: str


@dataclass(frozen=True)
class CycleRecord:
    i_s: int
    i_e: int
    kind: str
    rep_index: int = 0
    phases: tuple[Phase, ...] = ()

    @property
    def length(self) -> int:
        return self.i_e - self.i_s + 1


@dataclass(frozen=True)
class PeakSet:
    peaks: np.ndarray
    valleys: np.ndarray
    prominences: np.ndarray
    valley_prominences: np.ndarray


def local_maxima(x: np.ndarray) -> np.ndarray:
    """Strict local maxima; flat tops report their middle sample (left-biased)."""
    out = []
    n = len(x)
    i = 1
    while i < n - 1:
        if x[i - 1] < x[i]:
            j = i
            while j + 1 < n - 1 and x[j + 1] == x[i]:
                j += 1
            if x[j + 1] < x[i]:
                out.append((i + j) // 2)
                i = j
        i += 1
    return np.array(out, dtype=int)


def prominence(x: np.ndarray, peak: int) -> float:
    """Height of ``peak`` above the higher of the two lowest points met while
    walking outward until a strictly higher sample or the sequence end."""
    h = x[peak]
    higher = np.flatnonzero(x[:peak] > h)
    lo = higher[-1] + 1 if higher.size else 0
    higher = np.flatnonzero(x[peak + 1:] > h)
    hi = peak + higher[0] if higher.size else len(x) - 1
    left_base = x[lo:peak + 1].min()
    right_base = x[peak:hi + 1].min()
    return float(h - max(left_base, right_base))


def _select(x, p_min, d_min):
    cand = local_maxima(x)
    prom = np.array([prominence(x, p) for p in cand], dtype=float)
    keep = prom >= p_min
    cand, prom = cand[keep], prom[keep]
    if d_min > 1 and cand.size > 1:
        # Highest prominence first; equal prominence keeps the earlier peak.
        order = sorted(range(len(cand)), key=lambda k: (-prom[k], cand[k]))
        alive = np.ones(len(cand), dtype=bool)
        for k in order:
            if not alive[k]:
                continue
            close = np.abs(cand - cand[k]) < d_min
            close[k] = False
            alive &= ~close
        cand, prom = cand[alive], prom[alive]
    return cand, prom


def find_peaks(series, p_min: float = P_MIN, d_min: int = D_MIN) -> PeakSet:
    x = np.asarray(series, dtype=float)
    if x.size < 3:
        raise TooShort(f"need at least 3 samples, got {x.size}")
    peaks, prom = _select(x, p_min, d_min)
    valleys, vprom = _select(-x, p_min, d_min)
    return PeakSet(peaks, valleys, prom, vprom)


def segment_cycles(series, config=None, *, sigma: float | None = SIGMA, p_min: float = P_MIN,
                   d_min: int = D_MIN, min_len: int = MIN_CYCLE, max_len: int = MAX_CYCLE) -> list[CycleRecord]:
    """Valley-to-valley repetitions with one interior peak, filtered to
    ``[min_len, max_len]`` frames (inclusive of both boundary frames).

    ``series`` is the raw representative-DoF trajectory; pass ``sigma=None``
    when it is already smoothed.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 3:
        return []
    if sigma is not None:
        x = gaussian_smooth(x, sigma)
    kind = "repetitive" if config is None else config.cycle_mode
    ps = find_peaks(x, p_min, d_min)
    cycles = []
    for a, b in zip(ps.valleys[:-1], ps.valleys[1:]):
        inside = np.count_nonzero((ps.peaks > a) & (ps.peaks < b))
        if inside == 1 and min_len <= b - a + 1 <= max_len:
            cycles.append(CycleRecord(int(a), int(b), kind, len(cycles) + 1))
    if kind == "alternating":
        cycles = [replace(c, phases=tuple(segment_phases(x, c))) for c in cycles]
    return cycles


def _runs(signs):
    runs = []
    start = 0
    for i in range(1, len(signs) + 1):
        if i == len(signs) or signs[i] != signs[start]:
            runs.append([start, i - 1, signs[start]])
            start = i
    return runs


def segment_phases(series, cycle: CycleRecord, min_sliver: int = MIN_SLIVER) -> list[Phase]:
    """Left/right phases inside ``cycle`` from sign changes of the signal
    minus its cycle mean. Boundary slivers shorter than ``min_sliver`` frames
    are absorbed by their neighbour. Positive excursions are labelled right."""
    x = np.asarray(series, dtype=float)[cycle.i_s:cycle.i_e + 1]
    if x.size == 0 or np.ptp(x) == 0:
        raise DegenerateCycle(f"signal constant on [{cycle.i_s}, {cycle.i_e}]")
    d = x - x.mean()
    s = np.sign(d)
    # Exact zeros inherit the previous sign (or the next one at the start).
    nz = np.flatnonzero(s)
    if nz.size == 0:
        raise DegenerateCycle("no non-zero samples after mean removal")
    s[:nz[0]] = s[nz[0]]
    for i in range(nz[0] + 1, len(s)):
        if s[i] == 0:
            s[i] = s[i - 1]
    runs = _runs(s.tolist())
    if len(runs) > 1 and runs[0][1] - runs[0][0] + 1 < min_sliver:
        runs[1][0] = runs[0][0]
        runs.pop(0)
    if len(runs) > 1 and runs[-1][1] - runs[-1][0] + 1 < min_sliver:
        runs[-2][1] = runs[-1][1]
        runs.pop()
    return [Phase(cycle.i_s + a, cycle.i_s + b, "right" if sgn > 0 else "left") for a, b, sgn in runs]


def rolling_std(series, w: int = HOLD_WINDOW) -> np.ndarray:
    """Trailing-window population std; entry k describes frames k..k+w-1 and
    belongs to frame k+w-1."""
    x = np.asarray(series, dtype=float)
    win = np.lib.stride_tricks.sliding_window_view(x, w)
    return win.std(axis=1)


def detect_static_hold(series, config=None, *, w: int = HOLD_WINDOW, min_len: int = HOLD_MIN_LEN,
                       percentile: float = HOLD_PERCENTILE) -> list[CycleRecord]:
    """Maximal runs whose rolling std is at most the 30th percentile of all
    rolling stds. Runs are counted in window-end frames and reported from the
    first frame of their first window. No duration cap applies."""
    x = np.asarray(series, dtype=float)
    if x.size < w:
        raise TooShort(f"need at least {w} samples, got {x.size}")
    sd = rolling_std(x, w)
    eps = np.percentile(sd, percentile)
    stable = sd <= eps
    holds = []
    k = 0
    while k < len(stable):
        if stable[k]:
            j = k
            while j + 1 < len(stable) and stable[j + 1]:
                j += 1
            if j - k + 1 >= min_len:
                holds.append(CycleRecord(k, j + w - 1, "static_hold", len(holds) + 1))
            k = j + 1
        else:
            k += 1
    return holds


def detect(series, config, *, sigma: float | None = SIGMA) -> list[CycleRecord]:
    """Dispatch on the exercise's cycle mode."""
    if config.cycle_mode == "static_hold":
        x = np.asarray(series, dtype=float)
        if sigma is not None and x.size:
            x = gaussian_smooth(x, sigma)
        return detect_static_hold(x, config) if x.size >= HOLD_WINDOW else []
    return segment_cycles(series, config, sigma=sigma)


def best_cycle(scores) -> int | None:
    """Index of the highest score; ties go to the earliest cycle."""
    best = None
    for i, s in enumerate(scores):
        if s is not None and (best is None or s > scores[best]):
            best = i
    return best


class StreamingCycleDetector:
    """Incremental detection over a growing trajectory.

    Each push re-runs batch detection on the prefix and releases cycles whose
    closing boundary lies at least ``lag`` frames in the past, so smoothing
    and prominence around it have settled. ``finish`` releases the rest.
    """

    def __init__(self, config, lag: int = 15, sigma: float | None = SIGMA):
        self.config = config
        self.lag = lag
        self.sigma = sigma
        self.values: list[float] = []
        self.emitted: list[CycleRecord] = []

    def _fresh(self, limit):
        last = self.emitted[-1].i_e if self.emitted else -1
        out = []
        for c in detect(np.asarray(self.values), self.config, sigma=self.sigma):
            if c.i_s >= last and c.i_e <= limit:
                c = replace(c, rep_index=len(self.emitted) + 1)
                self.emitted.append(c)
                out.append(c)
                last = c.i_e
        return out

    def push(self, value: float) -> list[CycleRecord]:
        self.values.append(float(value))
        t = len(self.values) - 1
        if t < MIN_CYCLE - 1 + self.lag:
            return []
        return self._fresh(t - self.lag)

    def finish(self) -> list[CycleRecord]:
        if len(self.values) < 3:
            return []
        return self._fresh(len(self.values) - 1)
