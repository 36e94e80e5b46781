"""Toy-scale vision/body-context fusion and the down-weighted token loss.

Visual tokens attend to embedded context tokens through residual multi-head
cross-attention. Scores are scaled by the square root of the model width
``d`` (not the per-head width). Heads are contiguous ``d/h`` column slices,
concatenated before the output projection.

A one-layer decoder head on top of the fused tokens predicts the next token
of a toy action stream; continuation tokens (``<next>``) carry loss weight
``alpha`` and everything else weight 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadTarget, DimMismatch, EmptyDataset

VOCAB = ("<next>", "<feedback>", "<ok>", "<viol>", "tall", "short", "heavy", "light", "knee", "hip")
NEXT, FEEDBACK, OK, VIOL = 0, 1, 2, 3
ALPHA = 0.1
INIT_GAIN = 0.1
PROJECTIONS = ("W_Q", "W_K", "W_V", "W_O")


def xavier_uniform(rng, fan_in, fan_out, gain=INIT_GAIN):
    lim = gain * np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


def softmax(z, axis=-1):
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class CrossAttnBlock:
    W_Q: np.ndarray
    W_K: np.ndarray
    W_V: np.ndarray
    W_O: np.ndarray
    heads: int = 1

    @classmethod
    def init(cls, d: int, heads: int = 1, seed: int = 0, gain: float = INIT_GAIN) -> "CrossAttnBlock":
        if d % heads:
            raise DimMismatch(f"model width {d} not divisible by {heads} heads")
        rng = np.random.default_rng(seed)
        return cls(*(xavier_uniform(rng, d, d, gain) for _ in PROJECTIONS), heads=heads)

    @property
    def d(self) -> int:
        return self.W_Q.shape[0]

    def params(self) -> dict:
        return {k: getattr(self, k) for k in PROJECTIONS}


def cross_attend(queries, context, block: CrossAttnBlock, return_cache: bool = False):
    """queries (N_v, d), context (N_m, d) -> queries + attention output."""
    F = np.asarray(queries, dtype=float)
    M = np.asarray(context, dtype=float)
    d = block.d
    if F.ndim != 2 or M.ndim != 2 or F.shape[1] != d or M.shape[1] != d:
        raise DimMismatch(f"expected (*, {d}) inputs, got {F.shape} and {M.shape}")
    Q, K, V = F @ block.W_Q, M @ block.W_K, M @ block.W_V
    dk = d // block.heads
    scale = 1.0 / np.sqrt(d)
    O = np.empty_like(Q)
    attn = []
    for h in range(block.heads):
        sl = slice(h * dk, (h + 1) * dk)
        A = softmax(Q[:, sl] @ K[:, sl].T * scale, axis=1)
        O[:, sl] = A @ V[:, sl]
        attn.append(A)
    Z = F + O @ block.W_O
    if return_cache:
        return Z, (F, M, Q, K, V, O, attn)
    return Z


def cross_attend_backward(dZ, block: CrossAttnBlock, cache):
    """Gradients of the projections and of the context tokens given dL/dZ."""
    F, M, Q, K, V, O, attn = cache
    d = block.d
    dk = d // block.heads
    scale = 1.0 / np.sqrt(d)
    g = {"W_O": O.T @ dZ}
    dO = dZ @ block.W_O.T
    dQ, dK, dV = np.zeros_like(Q), np.zeros_like(K), np.zeros_like(V)
    for h, A in enumerate(attn):
        sl = slice(h * dk, (h + 1) * dk)
        dA = dO[:, sl] @ V[:, sl].T
        dV[:, sl] = A.T @ dO[:, sl]
        dS = A * (dA - np.sum(dA * A, axis=1, keepdims=True))
        dQ[:, sl] = dS @ K[:, sl] * scale
        dK[:, sl] = dS.T @ Q[:, sl] * scale
    g["W_Q"] = F.T @ dQ
    g["W_K"] = M.T @ dK
    g["W_V"] = M.T @ dV
    dM = dK @ block.W_K.T + dV @ block.W_V.T
    return g, dM


# ------------------------------------------------------------------ loss

def token_weights(targets, alpha: float = ALPHA, continuation=(NEXT,)) -> np.ndarray:
    t = np.asarray(targets)
    return np.where(np.isin(t, continuation), alpha, 1.0)


def cross_entropy(logits, targets):
    """Summed next-token NLL and its gradient w.r.t. logits."""
    return weighted_ce(logits, targets, alpha=1.0)


def weighted_ce(logits, targets, alpha: float = ALPHA, continuation=(NEXT,)):
    """sum_t w_t * -log softmax(logits_t)[target_t]; w = alpha on
    continuation targets, 1 otherwise. Returns (loss, dloss/dlogits)."""
    L = np.asarray(logits, dtype=float)
    y = np.asarray(targets, dtype=int)
    if L.ndim != 2 or L.shape[1] < 2:
        raise DimMismatch(f"logits must be (N-1, V) with V >= 2, got {L.shape}")
    if y.shape != (L.shape[0],) or np.any(y < 0) or np.any(y >= L.shape[1]):
        raise BadTarget("targets must be valid vocabulary indices, one per row")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    w = token_weights(y, alpha, continuation)
    z = L - L.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    rows = np.arange(len(y))
    loss = -np.sum(w * logp[rows, y])
    grad = np.exp(logp)
    grad[rows, y] -= 1.0
    return float(loss), grad * w[:, None]


# ------------------------------------------------------------- toy model

@dataclass
class FusionModel:
    block: CrossAttnBlock
    E: np.ndarray  # token embeddings (V, d)
    P: np.ndarray  # position embeddings (max_len, d)
    W_out: np.ndarray  # (d, V)
    b_out: np.ndarray  # (V,)

    @classmethod
    def init(cls, d: int = 32, heads: int = 2, max_len: int = 8, vocab: int = len(VOCAB), seed: int = 0):
        rng = np.random.default_rng(seed)
        block = CrossAttnBlock.init(d, heads, seed=seed)
        return cls(block, rng.normal(0, 1.0, (vocab, d)), rng.normal(0, 1.0, (max_len, d)),
                   xavier_uniform(rng, d, vocab), np.zeros(vocab))

    def params(self) -> dict:
        p = dict(self.block.params())
        p.update(E=self.E, P=self.P, W_out=self.W_out, b_out=self.b_out)
        return p

    @classmethod
    def from_params(cls, p: dict, heads: int) -> "FusionModel":
        block = CrossAttnBlock(p["W_Q"], p["W_K"], p["W_V"], p["W_O"], heads)
        return cls(block, p["E"], p["P"], p["W_out"], p["b_out"])

    def copy(self) -> "FusionModel":
        return FusionModel.from_params({k: v.copy() for k, v in self.params().items()}, self.block.heads)

    def logits(self, visual, ctx_ids, tokens, return_cache=False):
        M = self.E[ctx_ids]
        Z, acache = cross_attend(visual, M, self.block, return_cache=True)
        g = Z.mean(axis=0)
        n = len(tokens) - 1
        H = self.E[tokens[:-1]] + self.P[:n] + g
        out = H @ self.W_out + self.b_out
        if return_cache:
            return out, (acache, Z, H, ctx_ids, tokens)
        return out

    def loss_and_grads(self, visual, ctx_ids, tokens, alpha: float = ALPHA):
        tokens = np.asarray(tokens, dtype=int)
        ctx_ids = np.asarray(ctx_ids, dtype=int)
        logits, (acache, Z, H, _, _) = self.logits(visual, ctx_ids, tokens, return_cache=True)
        loss, dlog = weighted_ce(logits, tokens[1:], alpha)
        grads = {k: np.zeros_like(v) for k, v in self.params().items()}
        grads["W_out"] = H.T @ dlog
        grads["b_out"] = dlog.sum(axis=0)
        dH = dlog @ self.W_out.T
        n = len(tokens) - 1
        np.add.at(grads["E"], tokens[:-1], dH)
        grads["P"][:n] = dH
        dZ = np.broadcast_to(dH.sum(axis=0) / Z.shape[0], Z.shape)
        g, dM = cross_attend_backward(dZ, self.block, acache)
        grads.update(g)
        np.add.at(grads["E"], ctx_ids, dM)
        return loss, grads

    def predict_last(self, visual, ctx_ids, tokens) -> int:
        return int(np.argmax(self.logits(visual, np.asarray(ctx_ids), np.asarray(tokens))[-1]))


# ---------------------------------------------------------- toy dataset

@dataclass(frozen=True)
class ToySample:
    visual: np.ndarray
    ctx_ids: np.ndarray
    tokens: np.ndarray
    violation: bool


def copy_task(n: int, seed: int = 0, n_visual: int = 8, d: int = 32, length: int = 6, p_violation: float = 0.5):
    """Streams of ``<next>`` tokens whose final token is ``<feedback>`` exactly
    when the context carries the violation flag."""
    rng = np.random.default_rng(seed)
    words = np.arange(4, len(VOCAB))
    out = []
    for _ in range(n):
        viol = bool(rng.random() < p_violation)
        ctx = np.array([*rng.choice(words, 2), VIOL if viol else OK])
        tokens = np.full(length, NEXT)
        tokens[-1] = FEEDBACK if viol else NEXT
        out.append(ToySample(rng.normal(0, 0.5, (n_visual, d)), ctx, tokens, viol))
    return out


class AdamW:
    """Adam with decoupled weight decay."""

    def __init__(self, params: dict, lr=2e-5, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.01):
        self.lr, self.b1, self.b2, self.eps, self.wd = lr, betas[0], betas[1], eps, weight_decay
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        for k, p in params.items():
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            mh = self.m[k] / (1 - self.b1 ** self.t)
            vh = self.v[k] / (1 - self.b2 ** self.t)
            p -= self.lr * (mh / (np.sqrt(vh) + self.eps) + self.wd * p)


def batch_loss(model: FusionModel, batch, alpha=ALPHA):
    total, acc = 0.0, None
    for s in batch:
        loss, g = model.loss_and_grads(s.visual, s.ctx_ids, s.tokens, alpha)
        total += loss
        acc = g if acc is None else {k: acc[k] + g[k] for k in acc}
    n = len(batch)
    return total / n, {k: v / n for k, v in acc.items()}


def train_fusion(data, steps: int = 200, lr: float = 2e-5, batch_size: int = 8, alpha: float = ALPHA,
                 seed: int = 0, model: FusionModel | None = None, d: int = 32, heads: int = 2,
                 history=None, scorer_frozen: bool = True) -> FusionModel:
    """Stage-two training; the joint scorer must already be frozen."""
    if not data:
        raise EmptyDataset("no training samples")
    if not scorer_frozen:
        raise ValueError("train the joint scorer first and freeze it")
    rng = np.random.default_rng(seed)
    model = FusionModel.init(d=d, heads=heads, max_len=len(data[0].tokens), seed=seed) if model is None else model.copy()
    params = model.params()
    opt = AdamW(params, lr=lr)
    for _ in range(steps):
        idx = rng.choice(len(data), size=min(batch_size, len(data)), replace=False)
        loss, grads = batch_loss(model, [data[i] for i in idx], alpha)
        if history is not None:
            history.append(loss)
        opt.step(params, grads)
    return model


def evaluate_fusion(model: FusionModel, data) -> dict:
    """Final-position accuracy and feedback recall."""
    correct, hits, positives = 0, 0, 0
    for s in data:
        pred = model.predict_last(s.visual, s.ctx_ids, s.tokens)
        correct += pred == s.tokens[-1]
        if s.violation:
            positives += 1
            hits += pred == FEEDBACK
    return {"accuracy": float(correct / len(data)), "feedback_recall": float(hits / positives) if positives else 1.0}
