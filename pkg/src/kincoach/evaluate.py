"""Temporal F-score: one-to-one matching of feedback timestamps."""
from __future__ import annotations

import json
from dataclasses import dataclass

from .skeleton import FPS

DEFAULT_TOL = 1.0  # s


@dataclass(frozen=True)
class TFScoreReport:
    precision: float
    recall: float
    f1: float
    tol_s: float
    matches: tuple[tuple[float, float], ...]  # (pred, truth)

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1, "tol_s": self.tol_s,
                "matches": [list(m) for m in self.matches]}


def tf_score(pred, truth, tol_s: float = DEFAULT_TOL) -> TFScoreReport:
    """Greedy earliest-first matching: each prediction, in time order, takes
    the earliest unmatched truth within +-tol."""
    if tol_s <= 0:
        raise ValueError("tolerance must be positive")
    pred, truth = sorted(pred), sorted(truth)
    used = [False] * len(truth)
    matches = []
    for p in pred:
        for i, g in enumerate(truth):
            if not used[i] and abs(p - g) <= tol_s:
                used[i] = True
                matches.append((p, g))
                break
    m = len(matches)
    precision = m / len(pred) if pred else 0.0
    if truth:
        recall = m / len(truth)
    else:
        recall = 1.0 if not pred else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return TFScoreReport(precision, recall, f1, tol_s, tuple(matches))


def read_times(lines, kinds=("corrective",)) -> list[float]:
    """Timestamps (s) from JSON lines carrying ``time_s`` or a frame ``t``.
    Records with a ``kind`` outside ``kinds`` are ignored."""
    out = []
    for line in lines:
        if not line.strip():
            continue
        doc = json.loads(line)
        if "kind" in doc and kinds and doc["kind"] not in kinds:
            continue
        out.append(float(doc["time_s"]) if "time_s" in doc else doc["t"] / FPS)
    return out
