"""Frame ingestion, windowing, smoothing and body-measurement profiles."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySeries, OutOfBand, StreamFormatError
from .skeleton import FPS, N_DOF

N_BETA = 10
WINDOW_FRAMES = 12  # tau
WINDOW_HZ = 4.0
MIN_CONFIDENCE = 0.5


@dataclass(frozen=True)
class AngleFrame:
    t: int
    q: np.ndarray
    beta: np.ndarray | None = None
    confidence: float = 1.0

    @classmethod
    def from_dict(cls, doc: dict, line: int | None = None) -> "AngleFrame":
        try:
            t = doc["t"]
            q = np.asarray(doc["q"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise StreamFormatError(f"bad frame record: {e}", line) from None
        if isinstance(t, bool) or not isinstance(t, int) or t < 0:
            raise StreamFormatError("'t' must be a non-negative integer", line)
        if q.shape != (N_DOF,):
            raise StreamFormatError(f"'q' must have {N_DOF} values", line)
        if not np.all(np.isfinite(q)) or np.any(np.abs(q) > math.pi):
            raise StreamFormatError("'q' must be finite with |q| <= pi", line)
        beta = doc.get("beta")
        if beta is not None:
            beta = np.asarray(beta, dtype=float)
            if beta.shape != (N_BETA,) or not np.all(np.isfinite(beta)):
                raise StreamFormatError(f"'beta' must have {N_BETA} finite values", line)
        conf = doc.get("conf", 1.0)
        if not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
            raise StreamFormatError("'conf' must lie in [0, 1]", line)
        return cls(t, q, beta, float(conf))

    def to_dict(self) -> dict:
        doc = {"t": self.t, "q": [float(v) for v in self.q]}
        if self.beta is not None:
            doc["beta"] = [float(v) for v in self.beta]
        doc["conf"] = self.confidence
        return doc


def parse_frame_line(line: str, lineno: int | None = None) -> AngleFrame:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as e:
        raise StreamFormatError(f"invalid JSON: {e.msg}", lineno) from None
    if not isinstance(doc, dict):
        raise StreamFormatError("frame record must be an object", lineno)
    return AngleFrame.from_dict(doc, lineno)


def read_frames(lines) -> list[AngleFrame]:
    """Parse a JSON-Lines frame stream; blank lines are skipped."""
    frames = []
    for n, line in enumerate(lines, 1):
        if line.strip():
            frames.append(parse_frame_line(line, n))
    return frames


# ------------------------------------------------------------- smoothing

def gaussian_kernel(sigma: float, truncate: float = 4.0) -> np.ndarray:
    radius = int(truncate * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(series, sigma: float = 2.0) -> np.ndarray:
    """Gaussian filter truncated at 4 sigma with half-sample reflection at
    the edges (``d c b a | a b c d | d c b a``)."""
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise EmptySeries("cannot smooth an empty series")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    k = gaussian_kernel(sigma)
    r = len(k) // 2
    padded = np.pad(x, r, mode="symmetric")
    return np.convolve(padded, k, mode="valid")


# ------------------------------------------------------------- windowing

@dataclass(frozen=True)
class KinematicWindow:
    frames: tuple[AngleFrame, ...]
    beta_bar: np.ndarray | None
    t_end: int
    warmup: bool
    low_confidence: bool = False

    @property
    def indices(self) -> list[int]:
        return [f.t for f in self.frames]


def window_grid(t_end: int, n: int = WINDOW_FRAMES, hz: float = WINDOW_HZ, fps: int = FPS) -> tuple[list[int], bool]:
    """Source-frame indices of the sampling grid ending at ``t_end``.

    Fractional offsets resolve toward older frames, negative indices are
    clamped to 0 and duplicates dropped. Returns (indices, warmup flag).
    """
    step = fps / hz
    raw = [t_end - math.ceil(k * step) for k in range(n - 1, -1, -1)]
    warmup = raw[0] < 0
    grid = sorted({max(0, i) for i in raw})
    return grid, warmup


def pool_beta(frames) -> np.ndarray | None:
    betas = [f.beta for f in frames if f.beta is not None]
    if not betas:
        return None
    return np.mean(np.stack(betas), axis=0)


def make_window(stream, t_end: int, min_confidence: float = MIN_CONFIDENCE) -> KinematicWindow:
    """Causal window of up to 12 frames sampled at 4 Hz ending at ``t_end``.

    ``stream`` is a time-ordered AngleFrame sequence; frames after ``t_end``
    are never read. A grid index with no frame maps to the latest earlier one.
    """
    grid, warmup = window_grid(t_end)
    past = [f for f in stream if f.t <= t_end]
    picked = []
    j = 0
    for idx in grid:
        while j + 1 < len(past) and past[j + 1].t <= idx:
            j += 1
        if past and past[j].t <= idx and (not picked or picked[-1] is not past[j]):
            picked.append(past[j])
    low = any(f.confidence < min_confidence for f in picked)
    return KinematicWindow(tuple(picked), pool_beta(picked), t_end, warmup, low)


# ----------------------------------------------------------- morphometry

@dataclass(frozen=True)
class MorphometricProfile:
    height_m: float
    mass_kg: float
    chest_m: float
    waist_m: float
    hip_m: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise OutOfBand(f"measurements must be positive: {vals.tolist()}")
        if not 0.5 <= self.height_m <= 2.5:
            raise OutOfBand(f"height {self.height_m} m outside [0.5, 2.5]")

    def as_array(self) -> np.ndarray:
        return np.array([self.height_m, self.mass_kg, self.chest_m, self.waist_m, self.hip_m])

    @classmethod
    def from_dict(cls, doc: dict) -> "MorphometricProfile":
        try:
            return cls(*(float(doc[k]) for k in ("height_m", "mass_kg", "chest_m", "waist_m", "hip_m")))
        except (KeyError, TypeError, ValueError) as e:
            raise OutOfBand(f"bad measurement record: {e}") from None


@dataclass(frozen=True)
class AffineShapeStub:
    """profile = base + matrix @ beta_bar, standing in for mesh measurement."""
    base: np.ndarray
    matrix: np.ndarray

    def __call__(self, beta_bar) -> MorphometricProfile:
        return MorphometricProfile(*(self.base + self.matrix @ np.asarray(beta_bar, dtype=float)))


# Column k is the measurement change per unit of beta_k; the first two shape
# coefficients dominate stature and girth, as in SMPL-style bases.
DEFAULT_STUB = AffineShapeStub(
    base=np.array([1.70, 70.0, 0.96, 0.82, 0.98]),
    matrix=np.array([
        [0.070, -0.010, 0.004, 0.000, 0.002, 0.000, 0.001, 0.000, 0.000, 0.000],
        [4.500, 6.000, 1.200, 0.500, -0.400, 0.300, 0.000, 0.200, 0.000, 0.100],
        [0.020, 0.050, 0.010, 0.004, 0.000, 0.002, 0.000, 0.000, 0.001, 0.000],
        [0.010, 0.060, 0.006, 0.008, 0.001, 0.000, 0.002, 0.000, 0.000, 0.001],
        [0.015, 0.045, 0.002, 0.006, 0.000, 0.003, 0.000, 0.001, 0.000, 0.000],
    ]),
)


def morphometrics_from_beta(beta_bar, stub: AffineShapeStub = DEFAULT_STUB) -> MorphometricProfile:
    return stub(beta_bar)

