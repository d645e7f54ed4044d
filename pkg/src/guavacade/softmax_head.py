"""Linear + softmax classification head trained with Adam on categorical
cross-entropy. With raw features as input this is multinomial logistic
regression, so the same code backs the "lr" base learner.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InputError
from .rng import substream

LOG_FLOOR = 1e-12


def softmax(u: np.ndarray) -> np.ndarray:
    """Row-wise softmax, max-shifted so large logits cannot overflow."""
    u = np.asarray(u, dtype=np.float64)
    if np.isnan(u).any():
        raise InputError("logits contain NaN")
    shifted = u - u.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def one_hot(labels: np.ndarray, k: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], k))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def cross_entropy(probs: np.ndarray, onehot: np.ndarray, weights=None) -> float:
    """Mean negative log-probability of the true class, log floored at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    onehot = np.asarray(onehot, dtype=np.float64)
    if probs.shape != onehot.shape or probs.ndim != 2:
        raise InputError(f"shape mismatch: probs {probs.shape} vs labels {onehot.shape}")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-6):
        raise InputError("probability rows must sum to 1")
    if not ((onehot.sum(axis=1) == 1.0).all() and np.isin(onehot, (0.0, 1.0)).all()):
        raise InputError("labels must be one-hot rows")
    p_true = (probs * onehot).sum(axis=1)
    losses = -np.log(np.maximum(p_true, LOG_FLOOR))
    if weights is None:
        return float(losses.mean())
    weights = np.asarray(weights, dtype=np.float64)
    return float((losses * weights).sum() / weights.sum())


@dataclass
class LinearModel:
    """d x K weight matrix plus bias; probabilities via softmax of logits."""

    weight: np.ndarray
    bias: np.ndarray
    class_names: list[str]
    loss_history: list[float] = field(default_factory=list)
    kind: str = "lr"

    @property
    def d(self) -> int:
        return self.weight.shape[0]

    @property
    def k(self) -> int:
        return self.weight.shape[1]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return softmax(x @ self.weight + self.bias)


def linear_forward(model: LinearModel, z: np.ndarray) -> np.ndarray:
    """Logits u = W^T z + b for a single feature vector."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (model.d,):
        raise InputError(f"feature vector has dim {z.shape}, model expects ({model.d},)")
    return z @ model.weight + model.bias


def head_gradient(model: LinearModel, z: np.ndarray, onehot: np.ndarray, weights=None):
    """Gradients of the batch cross-entropy w.r.t. weight and bias.

    d loss / d logits = (P - Y) / N, or weight-normalized when sample
    weights are given.
    """
    z = np.asarray(z, dtype=np.float64)
    onehot = np.asarray(onehot, dtype=np.float64)
    if z.ndim != 2 or onehot.ndim != 2 or z.shape[0] != onehot.shape[0]:
        raise InputError("batch features and labels must have matching rows")
    if z.shape[1] != model.d or onehot.shape[1] != model.k:
        raise InputError("batch shapes do not match the model")
    probs = softmax(z @ model.weight + model.bias)
    delta = probs - onehot
    if weights is None:
        delta = delta / z.shape[0]
    else:
        weights = np.asarray(weights, dtype=np.float64)
        delta = delta * weights[:, None] / weights.sum()
    return z.T @ delta, delta.sum(axis=0)


@dataclass
class AdamState:
    """First/second moment accumulators for a list of parameter arrays."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    eta: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, eta=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            eta=eta,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


def adam_step(state: AdamState, params, grads):
    """One bias-corrected Adam update; returns the new parameter arrays."""
    state.t += 1
    t = state.t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[i] / (1.0 - state.beta1**t)
        v_hat = state.v[i] / (1.0 - state.beta2**t)
        out.append(p - state.eta * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    eta: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise InputError("epochs must be >= 1")
        if self.batch_size < 1:
            raise InputError("batch_size must be >= 1")


def train_softmax_head(ds: Dataset, cfg: TrainConfig, weights=None) -> LinearModel:
    """Mini-batch Adam over seeded shuffles; deterministic for a fixed seed.

    The last incomplete batch is kept and weighted by its true mass in the
    recorded per-epoch mean loss.
    """
    if ds.n == 0:
        raise InputError("cannot train on an empty dataset")
    x = ds.features.astype(np.float64)
    y = one_hot(ds.labels, ds.k)
    w = None if weights is None else np.asarray(weights, dtype=np.float64)
    init_rng = substream(cfg.seed, "softmax-init")
    scale = 1.0 / np.sqrt(ds.d)
    model = LinearModel(
        weight=init_rng.uniform(-scale, scale, size=(ds.d, ds.k)),
        bias=np.zeros(ds.k),
        class_names=ds.class_names,
    )
    state = AdamState.for_params(
        [model.weight, model.bias], eta=cfg.eta, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps
    )
    for epoch in range(cfg.epochs):
        perm = substream(cfg.seed, "softmax-shuffle", epoch).permutation(ds.n)
        loss_sum = 0.0
        mass_sum = 0.0
        for start in range(0, ds.n, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            xb, yb = x[batch], y[batch]
            wb = None if w is None else w[batch]
            probs = softmax(xb @ model.weight + model.bias)
            loss = cross_entropy(probs, yb, wb)
            mass = float(batch.size) if wb is None else float(wb.sum())
            loss_sum += loss * mass
            mass_sum += mass
            grads = head_gradient(model, xb, yb, wb)
            model.weight, model.bias = adam_step(state, [model.weight, model.bias], grads)
        model.loss_history.append(loss_sum / mass_sum)
    return model
