"""Independent brute-force oracles used to freeze expected test values.

Everything here is written from first principles (python loops, explicit
formulas) and deliberately shares no code with the library paths it checks.
"""

import math


def metric_oracle(truth, predictions, k):
    """Per-class and weighted precision/recall/F1 by direct pair counting."""
    n = len(truth)
    tp = [0] * k
    fp = [0] * k
    fn = [0] * k
    correct = 0
    for t, p in zip(truth, predictions):
        if t == p:
            tp[t] += 1
            correct += 1
        else:
            fp[p] += 1
            fn[t] += 1
    support = [tp[c] + fn[c] for c in range(k)]
    precision, recall, f1 = [], [], []
    for c in range(k):
        prec = tp[c] / (tp[c] + fp[c]) if tp[c] + fp[c] > 0 else 0.0
        rec = tp[c] / (tp[c] + fn[c]) if tp[c] + fn[c] > 0 else 0.0
        precision.append(prec)
        recall.append(rec)
        f1.append(2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0)
    weighted = lambda xs: sum(support[c] / n * xs[c] for c in range(k))
    return {
        "accuracy": correct / n,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "support": support,
        "weighted_precision": weighted(precision),
        "weighted_recall": weighted(recall),
        "weighted_f1": weighted(f1),
    }


def central_difference(f, x, eps=1e-5):
    """Central finite-difference gradient of scalar f at flat list x."""
    grad = []
    for i in range(len(x)):
        hi = list(x)
        lo = list(x)
        hi[i] += eps
        lo[i] -= eps
        grad.append((f(hi) - f(lo)) / (2 * eps))
    return grad


def second_difference(f, x, i, step=2e-2):
    """Five-point-stencil second derivative in coordinate i (O(step^4))."""

    def at(delta):
        shifted = list(x)
        shifted[i] += delta
        return f(shifted)

    return (
        -at(2 * step) + 16 * at(step) - 30 * at(0.0) + 16 * at(-step) - at(-2 * step)
    ) / (12 * step**2)


def gini_split_oracle(values, labels, k):
    """Enumerate every midpoint threshold of a 1-d feature; return the
    (threshold, weighted-gini-decrease) pairs, unweighted samples."""

    def gini(group):
        if not group:
            return 0.0
        total = len(group)
        return 1.0 - sum((sum(1 for g in group if g == c) / total) ** 2 for c in range(k))

    distinct = sorted(set(values))
    results = []
    parent = gini(labels)
    n = len(values)
    for lo, hi in zip(distinct[:-1], distinct[1:]):
        thr = (lo + hi) / 2.0
        left = [labels[i] for i in range(n) if values[i] <= thr]
        right = [labels[i] for i in range(n) if values[i] > thr]
        decrease = parent - len(left) / n * gini(left) - len(right) / n * gini(right)
        results.append((thr, decrease))
    return results


def knn_vote_oracle(train_x, train_y, query, k_neighbors, n_classes):
    """Vote fractions by exhaustive distance sort; ties by lower index."""
    dists = []
    for i, row in enumerate(train_x):
        d2 = sum((a - b) ** 2 for a, b in zip(row, query))
        dists.append((d2, i))
    dists.sort()
    votes = [train_y[i] for _, i in dists[:k_neighbors]]
    return [votes.count(c) / k_neighbors for c in range(n_classes)]


def softmax_oracle(logits):
    """Softmax via math.exp on shifted values (reference, not the library)."""
    m = max(logits)
    exps = [math.exp(v - m) for v in logits]
    s = sum(exps)
    return [e / s for e in exps]


def row_logloss(scores, true_class):
    """Cross-entropy of one score row, for finite-difference g/h checks."""
    return -math.log(softmax_oracle(scores)[true_class])
