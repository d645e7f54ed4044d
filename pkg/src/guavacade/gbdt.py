"""Histogram-based gradient-boosted trees with a multiclass softmax
objective — the refinement stage of the cascade.

Features are quantized to at most 256 bins (8-bit codes, cache-friendly
histograms); per node, gradient/hessian sums accumulate per bin and the best
split maximizes the second-order gain

    1/2 * [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)]

with ties broken toward the lower feature then the lower bin. Leaf values
are the closed-form Newton step -G/(H+lambda), shrunk by the learning rate.
Two growth modes mirror the common libraries: "leaf_wise" expands the
frontier leaf with the largest gain until max_leaves ("lgbm-like"),
"level_wise" expands whole depth levels until max_depth ("xgb-like").
"""

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .data import Dataset
from .errors import InputError
from .softmax_head import LOG_FLOOR, one_hot, softmax

GROWTH_MODES = ("leaf_wise", "level_wise")


@dataclass
class GbdtConfig:
    n_iters: int = 100
    learning_rate: float = 0.1
    growth: str = "leaf_wise"
    max_leaves: int = 31
    max_depth: int = 6
    reg_lambda: float = 1.0
    min_hessian_per_leaf: float = 1e-3
    n_bins: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.n_iters < 1:
            raise InputError("n_iters must be >= 1")
        if not 0.0 <= self.learning_rate <= 1.0:
            raise InputError("learning_rate must be in [0, 1]")
        if self.growth not in GROWTH_MODES:
            raise InputError(f"growth must be one of {GROWTH_MODES}")
        if self.max_leaves < 2:
            raise InputError("max_leaves must be >= 2")
        if self.max_depth < 1:
            raise InputError("max_depth must be >= 1")
        if not 2 <= self.n_bins <= 256:
            raise InputError("n_bins must be in [2, 256]")
        if self.reg_lambda < 0 or self.min_hessian_per_leaf < 0:
            raise InputError("reg_lambda and min_hessian_per_leaf must be >= 0")


@dataclass
class BinnedMatrix:
    """8-bit bin codes plus per-feature ascending split thresholds.

    code b covers (edges[b-1], edges[b]]; a value equal to an edge lands in
    the lower bin, so x_a <= x_b implies code_a <= code_b.
    """

    codes: np.ndarray
    edges: list[np.ndarray]

    @property
    def bins_per_feature(self) -> list[int]:
        return [len(e) + 1 for e in self.edges]


def quantile_bin(data, n_bins: int = 256) -> BinnedMatrix:
    """Quantize each feature at empirical quantiles of its distinct values.

    Features with at most n_bins distinct values map bijectively onto bins.
    """
    x = data.features if isinstance(data, Dataset) else np.asarray(data)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InputError("expected a non-empty 2-d feature matrix")
    if not 2 <= n_bins <= 256:
        raise InputError("n_bins must be in [2, 256]")
    n, d = x.shape
    codes = np.empty((n, d), dtype=np.uint8)
    edges = []
    for j in range(d):
        col = x[:, j].astype(np.float64)
        u = np.unique(col)
        if u.size <= 1:
            e = np.empty(0)
        elif u.size <= n_bins:
            e = (u[:-1] + u[1:]) / 2.0
        else:
            ranks = np.round(np.arange(1, n_bins) * u.size / n_bins).astype(np.int64)
            ranks = np.clip(ranks, 1, u.size - 1)
            e = np.unique((u[ranks - 1] + u[ranks]) / 2.0)
        codes[:, j] = np.searchsorted(e, col, side="left")
        edges.append(e)
    return BinnedMatrix(codes, edges)


def softmax_grad_hess(scores: np.ndarray, labels, weights=None):
    """Per-sample, per-class gradient p - y and hessian p(1 - p) of the
    softmax cross-entropy; sample weights multiply both."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        raise InputError("scores must be finite")
    p = softmax(scores)
    g = p - one_hot(labels, scores.shape[1])
    h = p * (1.0 - p)
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        g = g * weights[:, None]
        h = h * weights[:, None]
    return g, h


@dataclass
class RegTree:
    """Flat regression tree over raw feature values; leaf values are already
    shrunk by the learning rate."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        return kernels.apply_tree(x, self.feature, self.threshold, self.left, self.right)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.value[self.apply(x)]


class _RegTreeBuilder:
    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.idx = []

    def add_node(self, idx, value) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.idx.append(idx)
        return len(self.feature) - 1

    def set_split(self, node, feature, threshold, left, right):
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = left
        self.right[node] = right
        self.idx[node] = None

    def leaf_updates(self):
        return [
            (self.idx[i], self.value[i])
            for i in range(len(self.feature))
            if self.feature[i] == -1
        ]

    def build(self) -> RegTree:
        return RegTree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            value=np.array(self.value, dtype=np.float64),
        )


@dataclass
class _NodeStats:
    node_id: int
    idx: np.ndarray
    g_sum: float
    h_sum: float
    depth: int
    split: tuple | None = None  # (gain, feature, bin, GL, HL)


def leaf_value(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    """Closed-form minimizer of the local quadratic objective."""
    return -g_sum / (h_sum + reg_lambda)


def _best_split(codes_t, idx, g, h, stats: _NodeStats, cfg: GbdtConfig):
    m = idx.size
    if m < 2:
        return None
    sub = np.ascontiguousarray(codes_t[:, idx])
    hist_g, hist_h, hist_c = kernels.gbdt_histograms(sub, g[idx], h[idx], cfg.n_bins)
    cg = np.cumsum(hist_g, axis=1)[:, :-1]
    ch = np.cumsum(hist_h, axis=1)[:, :-1]
    cc = np.cumsum(hist_c, axis=1)[:, :-1]
    gl, hl = cg, ch
    gr, hr = stats.g_sum - cg, stats.h_sum - ch
    lam = cfg.reg_lambda
    parent_term = stats.g_sum**2 / (stats.h_sum + lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 0.5 * (gl**2 / (hl + lam) + gr**2 / (hr + lam) - parent_term)
    valid = (cc >= 1) & (cc <= m - 1)
    valid &= (hl >= cfg.min_hessian_per_leaf) & (hr >= cfg.min_hessian_per_leaf)
    valid &= np.isfinite(gain)
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain))  # feature-major: lower feature, then lower bin
    j, b = divmod(flat, gain.shape[1])
    best = float(gain[j, b])
    if best <= 0.0:
        return None
    return (best, int(j), int(b), float(cg[j, b]), float(ch[j, b]))


def _grow(codes_t, edges, g, h, cfg: GbdtConfig, idx_all) -> tuple[RegTree, list]:
    builder = _RegTreeBuilder()
    lr = cfg.learning_rate
    g_sum = float(g[idx_all].sum())
    h_sum = float(h[idx_all].sum())
    root = _NodeStats(
        builder.add_node(idx_all, lr * leaf_value(g_sum, h_sum, cfg.reg_lambda)),
        idx_all,
        g_sum,
        h_sum,
        depth=0,
    )

    def make_children(stats: _NodeStats):
        gain, j, b, gl, hl = stats.split
        mask = codes_t[j, stats.idx] <= b
        left_idx, right_idx = stats.idx[mask], stats.idx[~mask]
        gr, hr = stats.g_sum - gl, stats.h_sum - hl
        left = _NodeStats(
            builder.add_node(left_idx, lr * leaf_value(gl, hl, cfg.reg_lambda)),
            left_idx, gl, hl, stats.depth + 1,
        )
        right = _NodeStats(
            builder.add_node(right_idx, lr * leaf_value(gr, hr, cfg.reg_lambda)),
            right_idx, gr, hr, stats.depth + 1,
        )
        builder.set_split(stats.node_id, j, float(edges[j][b]), left.node_id, right.node_id)
        return left, right

    if cfg.growth == "leaf_wise":
        heap = []
        counter = 0
        root.split = _best_split(codes_t, idx_all, g, h, root, cfg)
        if root.split is not None:
            heapq.heappush(heap, (-root.split[0], counter, root))
            counter += 1
        n_leaves = 1
        while heap and n_leaves < cfg.max_leaves:
            _, _, stats = heapq.heappop(heap)
            left, right = make_children(stats)
            n_leaves += 1
            for child in (left, right):
                child.split = _best_split(codes_t, child.idx, g, h, child, cfg)
                if child.split is not None:
                    heapq.heappush(heap, (-child.split[0], counter, child))
                    counter += 1
    else:
        frontier = [root]
        for _ in range(cfg.max_depth):
            nxt = []
            for stats in frontier:
                stats.split = _best_split(codes_t, stats.idx, g, h, stats, cfg)
                if stats.split is None:
                    continue
                nxt.extend(make_children(stats))
            if not nxt:
                break
            frontier = nxt
    updates = builder.leaf_updates()
    return builder.build(), updates


def grow_tree(binned: BinnedMatrix, g: np.ndarray, h: np.ndarray, cfg: GbdtConfig) -> RegTree:
    """Grow one regression tree on (gradient, hessian) targets."""
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if g.shape != h.shape or g.ndim != 1 or g.shape[0] != binned.codes.shape[0]:
        raise InputError("g and h must be 1-d and match the binned matrix rows")
    codes_t = np.ascontiguousarray(binned.codes.T)
    idx_all = np.arange(binned.codes.shape[0], dtype=np.int64)
    tree, _ = _grow(codes_t, binned.edges, g, h, cfg, idx_all)
    return tree


@dataclass
class GbdtModel:
    """Boosted ensemble: prediction = softmax(base_score + sum of trees)."""

    trees: list[list[RegTree]]  # [iteration][class]
    base_score: np.ndarray
    config: GbdtConfig
    class_names: list[str]
    d: int
    loss_history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.class_names)

    @property
    def kind(self) -> str:
        return "gbdt-leaf" if self.config.growth == "leaf_wise" else "gbdt-level"

    def predict_raw(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        scores = np.tile(self.base_score, (x.shape[0], 1))
        for round_trees in self.trees:
            for k, tree in enumerate(round_trees):
                scores[:, k] += tree.predict(x)
        return scores

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.predict_raw(x))


def fit_gbdt(ds: Dataset, cfg: GbdtConfig, weights=None) -> GbdtModel:
    """Boost K trees per iteration against softmax gradients/hessians.

    base_score is the log of (weighted) class priors; training multiclass
    log-loss is recorded after every iteration.
    """
    from .trees import _check_fit_inputs

    if ds.k < 2:
        raise InputError("gradient boosting needs at least 2 classes")
    w = _check_fit_inputs(ds, weights)
    binned = quantile_bin(ds.features, cfg.n_bins)
    codes_t = np.ascontiguousarray(binned.codes.T)
    idx_all = np.arange(ds.n, dtype=np.int64)
    priors = np.bincount(ds.labels, weights=w, minlength=ds.k) / w.sum()
    base_score = np.log(np.clip(priors, LOG_FLOOR, None))
    scores = np.tile(base_score, (ds.n, 1))
    rows = np.arange(ds.n)
    trees: list[list[RegTree]] = []
    loss_history: list[float] = []
    for _ in range(cfg.n_iters):
        g, h = softmax_grad_hess(scores, ds.labels, w)
        round_trees = []
        for k in range(ds.k):
            tree, updates = _grow(codes_t, binned.edges, g[:, k], h[:, k], cfg, idx_all)
            for idx, value in updates:
                scores[idx, k] += value
            round_trees.append(tree)
        trees.append(round_trees)
        p_true = softmax(scores)[rows, ds.labels]
        losses = -np.log(np.maximum(p_true, LOG_FLOOR))
        loss_history.append(float((losses * w).sum() / w.sum()))
    return GbdtModel(trees, base_score, cfg, ds.class_names, ds.d, loss_history)
