"""Two-stage confidence-gated ensemble.

A base classifier handles every sample whose confidence (max class
probability) reaches the threshold tau; anything below the threshold is
routed to the refinement model. The boundary case gamma == tau stays with
the base model.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .classifiers import compute_sample_weights, fit_classifier, predict_proba
from .data import Dataset
from .errors import InputError

DEFAULT_TAU = 0.8

TAU_MIN, TAU_MAX = 0.0, 1.01


def confidence(probs: np.ndarray) -> float:
    """gamma = max_c p(c); lies in [1/K, 1] for a valid distribution."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or probs.size < 1:
        raise InputError("expected a 1-d probability vector")
    if not np.isfinite(probs).all() or probs.min() < -1e-9:
        raise InputError("probabilities must be finite and non-negative")
    if abs(probs.sum() - 1.0) > 1e-6:
        raise InputError(f"probabilities sum to {probs.sum():.9f}, not 1")
    return float(probs.max())


def empirical_risk(predictions, truth) -> float:
    """Fraction of misclassified samples; equals 1 - accuracy."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape or predictions.ndim != 1:
        raise InputError("predictions and truth must be 1-d and equal length")
    if predictions.size == 0:
        raise InputError("empty prediction set")
    return float(np.mean(predictions != truth))


@dataclass
class RoutedPrediction:
    label: int
    probabilities: np.ndarray
    confidence: float
    route: str  # "base" | "refine"


@dataclass
class CascadeFitInfo:
    base_seconds: float = 0.0
    refine_seconds: float = 0.0
    base_fraction: float = 1.0
    refine_fraction: float = 0.0
    fallback_full: bool = False
    weighting: str = "none"
    refine_scope: str = "full"


@dataclass
class CascadeModel:
    base: object
    refine: object | None
    tau: float
    class_names: list[str]
    kind: str = "cascade"
    fit_info: CascadeFitInfo = field(default_factory=CascadeFitInfo)

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def k(self) -> int:
        return len(self.class_names)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Probabilities of the deciding model per row."""
        return cascade_predict_batch(self, x)[3]


def fit_cascade(
    train: Dataset,
    base_kind: str,
    refine_kind: str = "gbdt-leaf",
    tau: float = DEFAULT_TAU,
    weighting: str = "none",
    refine_scope: str = "full",
    base_params: dict | None = None,
    refine_params: dict | None = None,
) -> CascadeModel:
    """Fit base and refinement stages.

    The base model always trains on the full set. The refinement model
    trains on the full set by default, or only on the samples the fitted
    base finds uncertain (refine_scope="uncertain_only"); if no training
    sample is uncertain, it falls back to the full set and flags the report.
    The refinement stage mirrors the base's class weighting, recomputed on
    whatever set it actually trains on.
    """
    if not TAU_MIN <= tau <= TAU_MAX:
        raise InputError(f"tau must be in [{TAU_MIN}, {TAU_MAX}]")
    if refine_scope not in ("full", "uncertain_only"):
        raise InputError(f"unknown refine_scope {refine_scope!r}")
    if train.k < 2:
        raise InputError("cascade needs at least 2 classes")
    info = CascadeFitInfo(weighting=weighting, refine_scope=refine_scope)
    w = compute_sample_weights(train.labels, train.k, weighting)

    t0 = time.perf_counter()
    base = fit_classifier(base_kind, train, w, base_params)
    info.base_seconds = time.perf_counter() - t0

    base_probs = predict_proba(base, train.features)
    gamma = base_probs.max(axis=1)
    info.base_fraction = float(np.mean(gamma >= tau))
    info.refine_fraction = 1.0 - info.base_fraction

    refine = None
    if refine_kind != "none":
        refine_ds = train
        if refine_scope == "uncertain_only":
            uncertain = np.flatnonzero(gamma < tau)
            if uncertain.size == 0:
                info.fallback_full = True
            else:
                refine_ds = train.subset(uncertain)
        rw = compute_sample_weights(refine_ds.labels, refine_ds.k, weighting)
        t0 = time.perf_counter()
        refine = fit_classifier(refine_kind, refine_ds, rw, refine_params)
        info.refine_seconds = time.perf_counter() - t0

    return CascadeModel(base, refine, tau, train.class_names, fit_info=info)


def cascade_predict_batch(model: CascadeModel, x: np.ndarray):
    """Route a batch; returns (labels, confidences, routes, probabilities).

    Probabilities come from whichever model decided each row. Input order is
    preserved.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    base_probs = predict_proba(model.base, x)
    gamma = base_probs.max(axis=1)
    to_refine = gamma < model.tau
    probs = base_probs.copy()
    routes = np.where(to_refine, "refine", "base")
    if model.refine is None:
        routes[:] = "base"
    elif to_refine.any():
        probs[to_refine] = predict_proba(model.refine, x[to_refine])
    labels = np.argmax(probs, axis=1)
    return labels, gamma, routes, probs


def cascade_predict(model: CascadeModel, x: np.ndarray) -> RoutedPrediction:
    """Route one feature vector through the gate."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputError("cascade_predict takes a single feature vector")
    labels, gamma, routes, probs = cascade_predict_batch(model, x)
    return RoutedPrediction(
        label=int(labels[0]),
        probabilities=probs[0],
        confidence=float(gamma[0]),
        route=str(routes[0]),
    )
