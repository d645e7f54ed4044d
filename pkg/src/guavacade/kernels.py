"""Hot numeric kernels with two interchangeable backends.

The numba backend JIT-compiles the inner loops; the numpy backend expresses
the same arithmetic with vectorized ufuncs. Setting ``GUAVACADE_NO_NUMBA=1``
(or any value other than ``0``/empty) in the environment selects the numpy
path; so does a failed numba import. ``benchmarks/bench_kernels.py`` compares
the two.

Both backends accumulate left-to-right in float64, so on tie-free feature
columns they produce bit-identical split decisions, histograms, and leaf
assignments. Sort order is always computed by numpy and passed in, never
recomputed inside a kernel, which keeps tie handling identical as well.

Kernel contracts:

- ``best_split_scan(x_sub, order, y, w, k, min_leaf)``: greedy CART split
  search over a gathered node matrix. Candidate thresholds sit between
  consecutive distinct sorted values; a split is valid when both children
  hold at least ``min_leaf`` samples and positive weight. The returned score
  is ``sum_c S_Lc^2/W_L + sum_c S_Rc^2/W_R`` (monotone in weighted Gini
  decrease), maximized with ties broken toward the lower feature column and
  the lower threshold position.

- ``gbdt_histograms(codes_sub, g, h)``: per-feature sums of gradients,
  hessians, and counts per bin code.

- ``apply_tree(x, feature, threshold, left, right)``: descend a flat binary
  tree (``feature < 0`` marks leaves; ``x <= threshold`` goes left) and
  return the leaf node index per row.
"""

import os

import numpy as np

_env = os.environ.get("GUAVACADE_NO_NUMBA", "")
NUMBA_DISABLED = _env not in ("", "0")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via GUAVACADE_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _best_split_scan_np(x_sub, order, y, w, k, min_leaf):
    m, n_feat = x_sub.shape
    best_feat = -1
    best_pos = -1
    best_score = -np.inf
    if m < 2 * min_leaf:
        return best_feat, best_pos, best_score
    counts = np.arange(1, m, dtype=np.int64)
    for f in range(n_feat):
        o = order[:, f]
        v = x_sub[o, f]
        ws = w[o]
        ys = y[o]
        w_left = np.cumsum(ws)[:-1]
        w_total = w_left[-1] + ws[-1] if m > 1 else ws.sum()
        w_right = w_total - w_left
        sl2 = np.zeros(m - 1)
        sr2 = np.zeros(m - 1)
        for c in range(k):
            cum_c = np.cumsum(ws * (ys == c))[:-1]
            total_c = cum_c[-1] + ws[-1] * (ys[-1] == c)
            sl2 += cum_c * cum_c
            rc = total_c - cum_c
            sr2 += rc * rc
        valid = (v[:-1] < v[1:]) & (counts >= min_leaf) & ((m - counts) >= min_leaf)
        valid &= (w_left > 0.0) & (w_right > 0.0)
        if not valid.any():
            continue
        score = np.where(valid, sl2 / w_left + sr2 / w_right, -np.inf)
        pos = int(np.argmax(score))
        if score[pos] > best_score:
            best_score = float(score[pos])
            best_feat = f
            best_pos = pos
    return best_feat, best_pos, best_score


def _gbdt_histograms_np(codes_sub, g, h, n_bins):
    n_feat = codes_sub.shape[0]
    hist_g = np.zeros((n_feat, n_bins))
    hist_h = np.zeros((n_feat, n_bins))
    hist_c = np.zeros((n_feat, n_bins), dtype=np.int64)
    ones = np.ones(codes_sub.shape[1], dtype=np.int64)
    for j in range(n_feat):
        row = codes_sub[j]
        np.add.at(hist_g[j], row, g)
        np.add.at(hist_h[j], row, h)
        np.add.at(hist_c[j], row, ones)
    return hist_g, hist_h, hist_c


def _apply_tree_np(x, feature, threshold, left, right):
    m = x.shape[0]
    node = np.zeros(m, dtype=np.int64)
    rows = np.arange(m)
    active = feature[node] >= 0
    while active.any():
        idx = rows[active]
        cur = node[idx]
        xv = x[idx, feature[cur]]
        node[idx] = np.where(xv <= threshold[cur], left[cur], right[cur])
        active = feature[node] >= 0
    return node


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _best_split_scan_nb(x_sub, order, y, w, k, min_leaf):  # pragma: no cover
        m, n_feat = x_sub.shape
        best_feat = -1
        best_pos = -1
        best_score = -np.inf
        if m < 2 * min_leaf:
            return best_feat, best_pos, best_score
        s_left = np.zeros(k)
        s_total = np.zeros(k)
        for f in range(n_feat):
            w_total = 0.0
            for c in range(k):
                s_total[c] = 0.0
            for i in range(m):
                o = order[i, f]
                s_total[y[o]] += w[o]
                w_total += w[o]
            for c in range(k):
                s_left[c] = 0.0
            w_left = 0.0
            for i in range(m - 1):
                o = order[i, f]
                s_left[y[o]] += w[o]
                w_left += w[o]
                if x_sub[o, f] >= x_sub[order[i + 1, f], f]:
                    continue
                n_l = i + 1
                if n_l < min_leaf or m - n_l < min_leaf:
                    continue
                w_right = w_total - w_left
                if w_left <= 0.0 or w_right <= 0.0:
                    continue
                sl2 = 0.0
                sr2 = 0.0
                for c in range(k):
                    sl2 += s_left[c] * s_left[c]
                    rc = s_total[c] - s_left[c]
                    sr2 += rc * rc
                score = sl2 / w_left + sr2 / w_right
                if score > best_score:
                    best_score = score
                    best_feat = f
                    best_pos = i
        return best_feat, best_pos, best_score

    @njit(cache=True)
    def _gbdt_histograms_nb(codes_sub, g, h, n_bins):  # pragma: no cover
        n_feat, m = codes_sub.shape
        hist_g = np.zeros((n_feat, n_bins))
        hist_h = np.zeros((n_feat, n_bins))
        hist_c = np.zeros((n_feat, n_bins), dtype=np.int64)
        for j in range(n_feat):
            for i in range(m):
                b = codes_sub[j, i]
                hist_g[j, b] += g[i]
                hist_h[j, b] += h[i]
                hist_c[j, b] += 1
        return hist_g, hist_h, hist_c

    @njit(cache=True)
    def _apply_tree_nb(x, feature, threshold, left, right):  # pragma: no cover
        m = x.shape[0]
        out = np.zeros(m, dtype=np.int64)
        for i in range(m):
            node = 0
            while feature[node] >= 0:
                if x[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] = node
        return out


BACKENDS = {
    "numpy": {
        "best_split_scan": _best_split_scan_np,
        "gbdt_histograms": _gbdt_histograms_np,
        "apply_tree": _apply_tree_np,
    }
}
if HAVE_NUMBA:
    BACKENDS["numba"] = {
        "best_split_scan": _best_split_scan_nb,
        "gbdt_histograms": _gbdt_histograms_nb,
        "apply_tree": _apply_tree_nb,
    }

ACTIVE_BACKEND = "numba" if HAVE_NUMBA else "numpy"

best_split_scan = BACKENDS[ACTIVE_BACKEND]["best_split_scan"]
gbdt_histograms = BACKENDS[ACTIVE_BACKEND]["gbdt_histograms"]
apply_tree = BACKENDS[ACTIVE_BACKEND]["apply_tree"]


def backend_name() -> str:
    return ACTIVE_BACKEND
