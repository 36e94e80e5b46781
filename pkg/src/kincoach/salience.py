"""Exercise-specific joint selection.

A 3-layer perceptron (ReLU hidden layers, sigmoid output) maps an exercise
descriptor to 24 joint-importance scores; the K highest-scoring joints and
all of their DoFs feed the downstream analysis. Without a visual backbone
the descriptor is a one-hot exercise id followed by six coarse per-region
trajectory statistics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadK, DimMismatch, EmptyDataset
from .skeleton import N_JOINTS, SKELETON

HIDDEN = (512, 256)
DROPOUT = 0.1
TOP_K = 12
EPS = 1e-7

REGIONS = {
    "legs_r": ["hip_r", "knee_r", "ankle_r", "subtalar_r", "mtp_r"],
    "legs_l": ["hip_l", "knee_l", "ankle_l", "subtalar_l", "mtp_l"],
    "trunk": ["pelvis", "lumbar", "thorax", "head"],
    "arm_r": ["scapula_r", "shoulder_r", "elbow_r", "forearm_r", "wrist_r"],
    "arm_l": ["scapula_l", "shoulder_l", "elbow_l", "forearm_l", "wrist_l"],
    "all": SKELETON.names,
}
N_STATS = len(REGIONS)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class SalienceScorer:
    def __init__(self, weights, biases):
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]

    @classmethod
    def init(cls, in_dim: int, seed: int = 0, hidden=HIDDEN) -> "SalienceScorer":
        rng = np.random.default_rng(seed)
        dims = (in_dim, *hidden, N_JOINTS)
        ws, bs = [], []
        for a, b in zip(dims[:-1], dims[1:]):
            lim = np.sqrt(6.0 / (a + b))
            ws.append(rng.uniform(-lim, lim, size=(a, b)))
            bs.append(np.zeros(b))
        return cls(ws, bs)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases), 1):
            out[f"W{i}"] = w
            out[f"b{i}"] = b
        return out

    @classmethod
    def from_params(cls, params: dict) -> "SalienceScorer":
        n = len(params) // 2
        return cls([params[f"W{i}"] for i in range(1, n + 1)], [params[f"b{i}"] for i in range(1, n + 1)])

    def copy(self) -> "SalienceScorer":
        return SalienceScorer([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, x, masks=None):
        """Returns (scores, cache). ``masks`` are pre-scaled dropout masks,
        one per hidden layer; None means evaluation mode."""
        h = np.atleast_2d(np.asarray(x, dtype=float))
        acts, pre = [h], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            if i < len(self.weights) - 1:
                h = np.maximum(z, 0.0)
                if masks is not None:
                    h = h * masks[i]
            else:
                h = _sigmoid(z)
            acts.append(h)
        return h, (acts, pre, masks)

    def score(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if x.shape[-1] != self.in_dim:
            raise DimMismatch(f"scorer expects {self.in_dim} features, got {x.shape[-1]}")
        s, _ = self.forward(x)
        return s[0] if x.ndim == 1 else s

    def backward(self, cache, d_scores):
        """Parameter gradients given dL/d(scores) for a forward pass."""
        acts, pre, masks = cache
        grads_w, grads_b = [None] * len(self.weights), [None] * len(self.weights)
        s = acts[-1]
        dz = d_scores * s * (1.0 - s)
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w[i] = acts[i].T @ dz
            grads_b[i] = dz.sum(axis=0)
            if i == 0:
                break
            dh = dz @ self.weights[i].T
            if masks is not None:
                dh = dh * masks[i - 1]
            dz = dh * (pre[i - 1] > 0)
        return grads_w, grads_b


def bce_loss(scores, labels, weights=None, eps: float = EPS):
    """Summed binary cross-entropy over joints and its gradient w.r.t. scores.

    Scores are clamped to [eps, 1 - eps]; clamped entries get zero gradient.
    ``weights`` optionally scales each term (same shape as ``labels``).
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    w = np.ones_like(s) if weights is None else np.asarray(weights, dtype=float)
    c = np.clip(s, eps, 1.0 - eps)
    loss = -np.sum(w * (y * np.log(c) + (1.0 - y) * np.log(1.0 - c)))
    grad = -w * (y / c - (1.0 - y) / (1.0 - c))
    grad = np.where((s < eps) | (s > 1.0 - eps), 0.0, grad)
    return float(loss), grad


def balanced_weights(labels) -> np.ndarray:
    """Per-entry weights proportional to the inverse frequency of each class."""
    y = np.asarray(labels, dtype=float)
    n = y.size
    n_pos = y.sum()
    n_neg = n - n_pos
    w_pos = n / (2.0 * n_pos) if n_pos else 0.0
    w_neg = n / (2.0 * n_neg) if n_neg else 0.0
    return np.where(y > 0.5, w_pos, w_neg)


def loss_and_grads(scorer: SalienceScorer, X, Y, class_weights=None, masks=None):
    """Mean over samples of the per-sample summed BCE, plus gradients."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    s, cache = scorer.forward(X, masks)
    loss, d = bce_loss(s, Y, class_weights)
    n = X.shape[0]
    gw, gb = scorer.backward(cache, d / n)
    return loss / n, gw, gb


def train_salience(X, Y, epochs: int = 300, lr: float = 0.05, seed: int = 0, dropout: float = DROPOUT,
                   balanced: bool = True, scorer: SalienceScorer | None = None, history=None) -> SalienceScorer:
    """Full-batch gradient descent on (balanced) BCE; returns a new scorer."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0 or X.size == 0:
        raise EmptyDataset("no training samples")
    rng = np.random.default_rng(seed)
    net = SalienceScorer.init(X.shape[1], seed) if scorer is None else scorer.copy()
    cw = balanced_weights(Y) if balanced else None
    keep = 1.0 - dropout
    for _ in range(epochs):
        masks = None
        if dropout > 0:
            masks = [(rng.random((X.shape[0], w.shape[1])) < keep) / keep for w in net.weights[:-1]]
        loss, gw, gb = loss_and_grads(net, X, Y, cw, masks)
        if history is not None:
            history.append(loss)
        for i in range(len(net.weights)):
            net.weights[i] -= lr * gw[i]
            net.biases[i] -= lr * gb[i]
    return net


@dataclass(frozen=True)
class JointSelection:
    joints: tuple[str, ...]  # skeleton order
    indices: tuple[int, ...]
    dofs: tuple[int, ...]

    def without(self, joint: str) -> "JointSelection":
        keep = [j for j in self.joints if j != joint]
        return make_selection(keep)


def make_selection(joints) -> JointSelection:
    idx = sorted(SKELETON.index(j) for j in joints)
    names = tuple(SKELETON.joints[i].name for i in idx)
    return JointSelection(names, tuple(idx), tuple(SKELETON.expand(names)))


def select_topk(scores, k: int = TOP_K) -> JointSelection:
    """K highest scores; equal scores prefer the lower joint index."""
    s = np.asarray(scores, dtype=float)
    if s.shape != (N_JOINTS,):
        raise DimMismatch(f"expected {N_JOINTS} scores, got shape {s.shape}")
    if not 1 <= k <= N_JOINTS:
        raise BadK(f"K must be in [1, {N_JOINTS}], got {k}")
    order = sorted(range(N_JOINTS), key=lambda j: (-s[j], j))
    return make_selection(SKELETON.joints[j].name for j in order[:k])


# ------------------------------------------------------------ descriptors

def region_stats(angles) -> np.ndarray:
    """Mean per-DoF standard deviation of each body region over the frames."""
    if angles is None:
        return np.zeros(N_STATS)
    a = np.atleast_2d(np.asarray(angles, dtype=float))
    sd = a.std(axis=0)
    return np.array([sd[SKELETON.expand(js)].mean() for js in REGIONS.values()])


def descriptor(exercise_id: str, exercises, angles=None) -> np.ndarray:
    onehot = np.zeros(len(exercises))
    onehot[list(exercises).index(exercise_id)] = 1.0
    return np.concatenate([onehot, region_stats(angles)])


def label_vector(joints) -> np.ndarray:
    y = np.zeros(N_JOINTS)
    for j in joints:
        y[SKELETON.index(j)] = 1.0
    return y


def descriptor_dataset(configs, per_exercise: int = 16, seed: int = 0, stat_scale: float = 0.3):
    """Separable training set: one-hot id plus uninformative random statistics,
    labelled with each exercise's salient-joint table."""
    rng = np.random.default_rng(seed)
    exercises = [c.exercise_id for c in configs]
    X, Y = [], []
    for c in configs:
        for _ in range(per_exercise):
            x = descriptor(c.exercise_id, exercises)
            x[len(exercises):] = rng.uniform(0.0, stat_scale, N_STATS)
            X.append(x)
            Y.append(label_vector(c.salient_joints))
    return np.array(X), np.array(Y), exercises
