"""Gaussian naive Bayes, KNN, AdaBoost-SAMME, class weighting, and the
uniform fit/predict surface over every learner in the package.

Every fitted model exposes ``predict_proba`` returning rows that are
non-negative and sum to 1, plus ``kind``, ``d``, ``k``, and ``class_names``.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InputError, TrainingError
from .trees import ClassTree, _check_fit_inputs, _fit_tree, fit_cart, fit_random_forest

ALPHA_CAP = float(np.log(1e12))

WEIGHTING_MODES = ("none", "balanced")


def compute_sample_weights(labels, k: int, mode: str) -> np.ndarray:
    """Per-sample weights for a weighting mode.

    "balanced" assigns w_c = N / (K * n_c), which gives every class the same
    total weight mass.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if mode not in WEIGHTING_MODES:
        raise InputError(f"unknown weighting mode {mode!r}")
    if mode == "none":
        return np.ones(labels.shape[0])
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    per_class = np.zeros(k)
    present = counts > 0
    per_class[present] = labels.shape[0] / (k * counts[present])
    return per_class[labels]


# ---------------------------------------------------------------------------
# Gaussian naive Bayes
# ---------------------------------------------------------------------------

VARIANCE_FLOOR = 1e-9


@dataclass
class GaussianNBModel:
    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    class_names: list[str]
    kind: str = "gnb"

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def k(self) -> int:
        return self.means.shape[0]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        log_joint = np.log(self.priors)[None, :] - 0.5 * (
            np.log(2.0 * np.pi * self.variances).sum(axis=1)[None, :]
            + (((x[:, None, :] - self.means[None, :, :]) ** 2) / self.variances[None, :, :]).sum(
                axis=2
            )
        )
        log_joint -= log_joint.max(axis=1, keepdims=True)
        p = np.exp(log_joint)
        return p / p.sum(axis=1, keepdims=True)


def fit_gaussian_nb(ds: Dataset, weights=None) -> GaussianNBModel:
    """Weighted per-class feature means/variances (variance floored) with
    priors equal to weighted class mass."""
    w = _check_fit_inputs(ds, weights)
    x = ds.features.astype(np.float64)
    means = np.zeros((ds.k, ds.d))
    variances = np.zeros((ds.k, ds.d))
    priors = np.zeros(ds.k)
    for c in range(ds.k):
        rows = ds.labels == c
        wc = w[rows]
        if not rows.any() or wc.sum() <= 0:
            raise InputError(f"class {ds.class_names[c]!r} has no weighted samples")
        xc = x[rows]
        mean = (wc[:, None] * xc).sum(axis=0) / wc.sum()
        var = (wc[:, None] * (xc - mean) ** 2).sum(axis=0) / wc.sum()
        means[c] = mean
        variances[c] = np.maximum(var, VARIANCE_FLOOR)
        priors[c] = wc.sum()
    priors /= priors.sum()
    return GaussianNBModel(priors, means, variances, ds.class_names)


# ---------------------------------------------------------------------------
# K nearest neighbors
# ---------------------------------------------------------------------------

def _squared_distances(x: np.ndarray, train: np.ndarray) -> np.ndarray:
    """Exact pairwise squared Euclidean distances, blocked to bound memory.

    Computed as explicit (x - t)^2 sums rather than the expanded dot-product
    form, so exact ties stay exact and index tie-breaking is meaningful.
    """
    m, d = x.shape
    n = train.shape[0]
    out = np.empty((m, n))
    block = max(1, int(16_000_000 / max(1, n * d)))
    for s in range(0, m, block):
        diff = x[s : s + block, None, :] - train[None, :, :]
        out[s : s + block] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


@dataclass
class KnnModel:
    features: np.ndarray
    labels: np.ndarray
    n_neighbors: int
    class_names: list[str]
    kind: str = "knn"

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def k(self) -> int:
        return len(self.class_names)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        train = self.features.astype(np.float64)
        d2 = _squared_distances(x, train)
        # stable sort: equal distances resolve to the lower sample index
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.n_neighbors]
        votes = self.labels[nearest]
        out = np.zeros((x.shape[0], self.k))
        for c in range(self.k):
            out[:, c] = (votes == c).sum(axis=1)
        return out / self.n_neighbors


def fit_knn(ds: Dataset, n_neighbors: int = 5) -> KnnModel:
    if not 1 <= n_neighbors <= ds.n:
        raise InputError(f"n_neighbors must be in [1, {ds.n}], got {n_neighbors}")
    return KnnModel(ds.features, ds.labels, n_neighbors, ds.class_names)


# ---------------------------------------------------------------------------
# AdaBoost (multiclass SAMME)
# ---------------------------------------------------------------------------

def samme_alpha(err: float, k: int) -> float:
    """SAMME vote weight: ln((1 - err) / err) + ln(K - 1)."""
    return float(np.log((1.0 - err) / err) + np.log(k - 1))


@dataclass
class AdaBoostModel:
    stumps: list[ClassTree]
    alphas: list[float]
    class_names: list[str]
    d: int
    n_estimators: int
    stump_depth: int
    kind: str = "ada"
    weight_history: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return len(self.class_names)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        votes = np.zeros((x.shape[0], self.k))
        for stump, alpha in zip(self.stumps, self.alphas):
            pred = np.argmax(stump.predict_proba(x), axis=1)
            votes[np.arange(x.shape[0]), pred] += alpha
        return votes / sum(self.alphas)


def fit_adaboost_samme(
    ds: Dataset,
    weights=None,
    n_estimators: int = 50,
    stump_depth: int = 1,
    record_weights: bool = False,
) -> AdaBoostModel:
    """Sequential reweighted stump fitting.

    A round with error >= 1 - 1/K discards its stump and stops; zero error
    keeps the stump with alpha capped at ln(1e12) and stops. Misclassified
    samples are upweighted by exp(alpha), then the distribution renormalizes
    to sum 1.
    """
    if ds.k < 2:
        raise InputError("AdaBoost needs at least 2 classes")
    if n_estimators < 1 or stump_depth < 1:
        raise InputError("n_estimators and stump_depth must be >= 1")
    w = _check_fit_inputs(ds, weights)
    dist = w / w.sum()
    chance = 1.0 - 1.0 / ds.k
    stumps: list[ClassTree] = []
    alphas: list[float] = []
    history = [] if record_weights else None
    for _ in range(n_estimators):
        stump = _fit_tree(ds.features, ds.labels, dist, ds.k, stump_depth, 1, ds.d, None)
        pred = np.argmax(stump.dist[stump.apply(ds.features)], axis=1)
        err = float(dist[pred != ds.labels].sum())
        if err >= chance:
            break
        if err <= 0.0:
            stumps.append(stump)
            alphas.append(ALPHA_CAP)
            break
        alpha = samme_alpha(err, ds.k)
        stumps.append(stump)
        alphas.append(alpha)
        dist = dist * np.exp(alpha * (pred != ds.labels))
        dist = dist / dist.sum()
        if history is not None:
            history.append(dist.copy())
    if not stumps:
        raise TrainingError(
            f"no stump beat the chance error rate {chance:.3f}; boosting produced no model"
        )
    return AdaBoostModel(
        stumps, alphas, ds.class_names, ds.d, n_estimators, stump_depth, weight_history=history
    )


# ---------------------------------------------------------------------------
# Uniform surface
# ---------------------------------------------------------------------------

BASE_KINDS = ("lr", "gnb", "knn", "dt", "rf", "ada")


def fit_classifier(kind: str, ds: Dataset, weights=None, params: dict | None = None):
    """Fit any learner by name; params carries kind-specific settings."""
    from . import gbdt as gbdt_mod
    from .softmax_head import TrainConfig, train_softmax_head

    params = dict(params or {})
    seed = params.pop("seed", 0)
    workers = params.pop("workers", 1)
    if kind == "lr":
        cfg = TrainConfig(seed=seed, **params)
        return train_softmax_head(ds, cfg, weights)
    if kind == "gnb":
        return fit_gaussian_nb(ds, weights)
    if kind == "knn":
        return fit_knn(ds, **params)
    if kind == "dt":
        return fit_cart(ds, weights, **params)
    if kind == "rf":
        return fit_random_forest(ds, weights, seed=seed, workers=workers, **params)
    if kind == "ada":
        return fit_adaboost_samme(ds, weights, **params)
    if kind in ("gbdt-leaf", "gbdt-level"):
        growth = "leaf_wise" if kind == "gbdt-leaf" else "level_wise"
        cfg = gbdt_mod.GbdtConfig(growth=growth, seed=seed, **params)
        return gbdt_mod.fit_gbdt(ds, cfg, weights)
    raise InputError(f"unknown classifier kind {kind!r}")


def predict_proba(model, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one feature vector or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.d:
        raise InputError(f"feature dim {x.shape[-1]} does not match model dim {model.d}")
    probs = model.predict_proba(x)
    return probs[0] if single else probs


def predict(model, x: np.ndarray):
    """Predicted class id(s); argmax ties resolve to the lowest class id."""
    probs = predict_proba(model, x)
    return int(np.argmax(probs)) if probs.ndim == 1 else np.argmax(probs, axis=1)
