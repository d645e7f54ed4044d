"""CART decision trees (weighted Gini splits) and bagged random forests.

Trees are stored as flat arrays so the same descent kernel serves training,
prediction, and JSON persistence. Split search is greedy: candidate
thresholds sit at midpoints of consecutive distinct sorted feature values,
ties resolved toward (larger gain, lower feature index, lower threshold).
A node stops at the depth limit, on purity, or when no valid split exists;
zero-gain splits are allowed, so label-consistent data is always separated.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import Dataset
from .errors import InputError
from .rng import substream

LEAF = -1


@dataclass
class ClassTree:
    """Flat binary tree; every node carries its class distribution."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    dist: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        return kernels.apply_tree(x, self.feature, self.threshold, self.left, self.right)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self.dist[self.apply(x)]


class _TreeBuilder:
    def __init__(self, k):
        self.k = k
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.dist = []

    def add_node(self, dist) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.dist.append(dist)
        return len(self.feature) - 1

    def set_split(self, node, feature, threshold, left, right):
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = left
        self.right[node] = right

    def build(self) -> ClassTree:
        return ClassTree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            dist=np.array(self.dist, dtype=np.float64).reshape(len(self.feature), self.k),
        )


def _node_distribution(y, w, k):
    cls_w = np.bincount(y, weights=w, minlength=k)
    total = cls_w.sum()
    if total <= 0.0:
        # all-zero-weight node (possible under bootstrap with sparse weights)
        cls_w = np.bincount(y, minlength=k).astype(np.float64)
        total = cls_w.sum()
    return cls_w, cls_w / total


def _fit_tree(x, y, w, k, max_depth, min_samples_leaf, mtry, rng) -> ClassTree:
    """Grow one tree depth-first (left child first) with an explicit stack.

    Node-level RNG draws (feature subsets) happen in that fixed order, so a
    tree is a pure function of (data, weights, its own rng stream).
    """
    d = x.shape[1]
    builder = _TreeBuilder(k)
    cls_w, dist = _node_distribution(y, w, k)
    root = builder.add_node(dist)
    stack = [(root, np.arange(x.shape[0], dtype=np.int64), 0, cls_w)]
    while stack:
        node, idx, depth, cls_w = stack.pop()
        if max_depth is not None and depth >= max_depth:
            continue
        if np.count_nonzero(cls_w) <= 1:
            continue
        if idx.size < 2 * min_samples_leaf:
            continue
        if mtry >= d:
            feats = np.arange(d, dtype=np.int64)
        else:
            feats = np.sort(rng.choice(d, size=mtry, replace=False)).astype(np.int64)
        x_sub = np.ascontiguousarray(x[idx][:, feats])
        order = np.argsort(x_sub, axis=0, kind="stable").astype(np.int64)
        f_local, pos, _score = kernels.best_split_scan(
            x_sub, order, y[idx], w[idx], k, min_samples_leaf
        )
        if f_local < 0:
            continue
        j = int(feats[f_local])
        o = order[:, f_local]
        lo = float(x_sub[o[pos], f_local])
        hi = float(x_sub[o[pos + 1], f_local])
        thr = (lo + hi) / 2.0
        go_left = x[idx, j] <= thr
        left_idx, right_idx = idx[go_left], idx[~go_left]
        lw, ldist = _node_distribution(y[left_idx], w[left_idx], k)
        rw, rdist = _node_distribution(y[right_idx], w[right_idx], k)
        left_node = builder.add_node(ldist)
        right_node = builder.add_node(rdist)
        builder.set_split(node, j, thr, left_node, right_node)
        stack.append((right_node, right_idx, depth + 1, rw))
        stack.append((left_node, left_idx, depth + 1, lw))
    return builder.build()


def _check_fit_inputs(ds: Dataset, weights):
    if ds.n < 1:
        raise InputError("cannot fit on an empty dataset")
    if weights is None:
        return np.ones(ds.n)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (ds.n,):
        raise InputError("weights length must match dataset rows")
    if (weights < 0).any():
        raise InputError("weights must be non-negative")
    if weights.sum() <= 0:
        raise InputError("weights must not all be zero")
    return weights


@dataclass
class CartModel:
    tree: ClassTree
    class_names: list[str]
    d: int
    max_depth: int | None
    min_samples_leaf: int
    kind: str = "dt"

    @property
    def k(self) -> int:
        return len(self.class_names)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self.tree.predict_proba(x)


def fit_cart(ds: Dataset, weights=None, max_depth=12, min_samples_leaf=1) -> CartModel:
    w = _check_fit_inputs(ds, weights)
    if max_depth is not None and max_depth < 0:
        raise InputError("max_depth must be >= 0 or None")
    if min_samples_leaf < 1:
        raise InputError("min_samples_leaf must be >= 1")
    tree = _fit_tree(ds.features, ds.labels, w, ds.k, max_depth, min_samples_leaf, ds.d, None)
    return CartModel(tree, ds.class_names, ds.d, max_depth, min_samples_leaf)


@dataclass
class ForestModel:
    trees: list[ClassTree]
    class_names: list[str]
    d: int
    n_trees: int
    mtry: int
    bootstrap: bool
    seed: int
    kind: str = "rf"

    @property
    def k(self) -> int:
        return len(self.class_names)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        acc = self.trees[0].predict_proba(x).copy()
        for tree in self.trees[1:]:
            acc += tree.predict_proba(x)
        return acc / len(self.trees)


def fit_random_forest(
    ds: Dataset,
    weights=None,
    n_trees=100,
    mtry=None,
    bootstrap=True,
    max_depth=12,
    min_samples_leaf=1,
    seed=0,
    workers=1,
) -> ForestModel:
    """Seeded bagging: tree i draws from substream (seed, "forest-tree", i),
    so the fitted model is identical for any worker count."""
    w = _check_fit_inputs(ds, weights)
    if n_trees < 1:
        raise InputError("n_trees must be >= 1")
    if mtry is None:
        mtry = int(np.ceil(np.sqrt(ds.d)))
    if not 1 <= mtry <= ds.d:
        raise InputError(f"mtry must be in [1, {ds.d}]")
    x, y = ds.features, ds.labels

    def fit_one(i: int) -> ClassTree:
        rng = substream(seed, "forest-tree", i)
        if bootstrap:
            rows = rng.integers(0, ds.n, size=ds.n)
            xi, yi, wi = x[rows], y[rows], w[rows]
        else:
            xi, yi, wi = x, y, w
        return _fit_tree(xi, yi, wi, ds.k, max_depth, min_samples_leaf, mtry, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(fit_one, range(n_trees)))
    else:
        trees = [fit_one(i) for i in range(n_trees)]
    return ForestModel(trees, ds.class_names, ds.d, n_trees, mtry, bootstrap, seed)
