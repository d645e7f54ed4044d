"""Confusion matrix, accuracy, per-class and weighted precision/recall/F1,
wall-clock timing, and report emission.

Weighted averages use true-class support; a zero denominator yields 0 and
raises an explicit flag rather than passing silently. Report JSON is
byte-stable for identical inputs, so fixed-seed runs diff clean.
"""

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

REPORT_SCHEMA_VERSION = 1


@dataclass
class ConfusionMatrix:
    """K x K counts; rows are true classes, columns predicted classes."""

    counts: np.ndarray
    class_names: list[str]

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(truth, predictions, k: int, class_names=None) -> ConfusionMatrix:
    truth = np.asarray(truth, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if truth.shape != predictions.shape or truth.ndim != 1:
        raise InputError("truth and predictions must be 1-d and equal length")
    for name, arr in (("truth", truth), ("prediction", predictions)):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            raise InputError(f"{name} labels must lie in [0, {k})")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (truth, predictions), 1)
    if class_names is None:
        class_names = [str(i) for i in range(k)]
    return ConfusionMatrix(counts, list(class_names))


@dataclass
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    accuracy: float
    per_class: list[ClassMetrics]
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    zero_division_flags: list[str] = field(default_factory=list)
    model_kind: str | None = None
    class_names: list[str] = field(default_factory=list)
    n: int = 0
    balanced: bool | None = None
    train_seconds: float | None = None
    infer_seconds_total: float | None = None
    infer_seconds_per_sample: float | None = None
    tau: float | None = None
    base_fraction: float | None = None
    refine_fraction: float | None = None
    flags: list[str] = field(default_factory=list)
    config: dict | None = None
    training: dict | None = None


def classification_report(cm: ConfusionMatrix) -> EvalReport:
    """Metrics portion of a report from a confusion matrix."""
    counts = cm.counts
    n = counts.sum()
    if n < 1:
        raise InputError("empty confusion matrix")
    tp = np.diag(counts).astype(np.float64)
    support = counts.sum(axis=1).astype(np.float64)
    predicted = counts.sum(axis=0).astype(np.float64)
    flags = []
    per_class = []
    for c in range(cm.k):
        name = cm.class_names[c]
        if predicted[c] > 0:
            precision = tp[c] / predicted[c]
        else:
            precision = 0.0
            flags.append(f"zero_division:precision:{name}")
        if support[c] > 0:
            recall = tp[c] / support[c]
        else:
            recall = 0.0
            flags.append(f"zero_division:recall:{name}")
        if precision + recall > 0:
            f1 = 2.0 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
            flags.append(f"zero_division:f1:{name}")
        per_class.append(ClassMetrics(name, precision, recall, f1, int(support[c])))
    share = support / n
    return EvalReport(
        accuracy=float(tp.sum() / n),
        per_class=per_class,
        weighted_precision=float(sum(share[c] * per_class[c].precision for c in range(cm.k))),
        weighted_recall=float(sum(share[c] * per_class[c].recall for c in range(cm.k))),
        weighted_f1=float(sum(share[c] * per_class[c].f1 for c in range(cm.k))),
        zero_division_flags=flags,
        class_names=list(cm.class_names),
        n=int(n),
        balanced=bool((support == support[0]).all()),
    )


def timed(action):
    """Run a zero-argument callable, returning (result, wall seconds)."""
    t0 = time.perf_counter()
    result = action()
    return result, time.perf_counter() - t0


def report_to_dict(report: EvalReport) -> dict:
    """Report as an ordered, JSON-ready dict (the report schema)."""
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "model_kind": report.model_kind,
        "dataset": {
            "n": report.n,
            "K": len(report.class_names),
            "class_names": list(report.class_names),
            "balanced": report.balanced,
        },
        "metrics": {
            "accuracy": report.accuracy,
            "per_class": [
                {
                    "name": m.name,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for m in report.per_class
            ],
            "weighted": {
                "precision": report.weighted_precision,
                "recall": report.weighted_recall,
                "f1": report.weighted_f1,
            },
        },
        "timing": {
            "train_s": report.train_seconds,
            "infer_total_s": report.infer_seconds_total,
            "infer_per_sample_s": report.infer_seconds_per_sample,
        },
    }
    if report.tau is not None:
        doc["cascade"] = {
            "tau": report.tau,
            "base_fraction": report.base_fraction,
            "refine_fraction": report.refine_fraction,
        }
    doc["flags"] = list(report.zero_division_flags) + list(report.flags)
    if report.config is not None:
        doc["config"] = report.config
    if report.training is not None:
        doc["training"] = report.training
    return doc


def dumps_report(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def render_confusion_matrix(cm: ConfusionMatrix) -> str:
    """Plain-text table with class names on both axes."""
    headers = ["true\\pred"] + list(cm.class_names)
    rows = [headers]
    for c in range(cm.k):
        rows.append([cm.class_names[c]] + [str(int(v)) for v in cm.counts[c]])
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines) + "\n"


def emit_report(report: EvalReport, cm: ConfusionMatrix, destination) -> None:
    """Write the JSON report to `destination` and the text confusion matrix
    alongside it (stem + '.cm.txt'). Byte-stable for identical inputs."""
    destination = os.fspath(destination)
    with open(destination, "w", encoding="utf-8") as fh:
        fh.write(dumps_report(report_to_dict(report)))
    stem, _ = os.path.splitext(destination)
    with open(stem + ".cm.txt", "w", encoding="utf-8") as fh:
        fh.write(render_confusion_matrix(cm))
