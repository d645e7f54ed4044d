"""Batch export: image manifest -> GAP-pooled FVEC feature file.

Rows land in manifest order regardless of batching. Unreadable images are
skipped with a logged warning and recorded in a sidecar list next to the
output; an export with zero successful images fails outright. Re-running
the same job against the same inputs produces a byte-identical file.
"""

import os
import sys
from dataclasses import dataclass

import numpy as np
import torch

from .backbone import Backbone, load_backbone
from .fvec import write_fvec
from .images import load_and_preprocess, read_manifest


class ExportError(RuntimeError):
    pass


@dataclass
class ExportJob:
    manifest: str
    out: str
    side: int = 224
    batch_size: int = 32
    weights: str = "imagenet"

    def __post_init__(self):
        if self.side < 1 or self.batch_size < 1:
            raise ValueError("side and batch size must be >= 1")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def export_deep_features(job: ExportJob, backbone: Backbone | None = None) -> int:
    """Run the job; returns the number of exported rows."""
    entries, class_names = read_manifest(job.manifest)
    if not entries:
        raise ExportError(f"{job.manifest}: manifest has no entries")
    if backbone is None:
        backbone = load_backbone(job.weights)
    root = os.path.dirname(os.path.abspath(job.manifest))
    class_index = {name: i for i, name in enumerate(class_names)}

    rows: list[np.ndarray] = []
    labels: list[int] = []
    skipped: list[str] = []
    batch_imgs: list[np.ndarray] = []
    batch_labels: list[int] = []

    def flush():
        if not batch_imgs:
            return
        tensor = torch.from_numpy(np.stack(batch_imgs))
        pooled = backbone.pooled(tensor).numpy().astype(np.float32)
        rows.extend(pooled)
        labels.extend(batch_labels)
        batch_imgs.clear()
        batch_labels.clear()

    for rel, label in entries:
        path = rel if os.path.isabs(rel) else os.path.join(root, rel)
        try:
            batch_imgs.append(load_and_preprocess(path, job.side))
        except (OSError, ValueError) as e:
            _log(f"warning: skipping {path}: {e}")
            skipped.append(rel)
            continue
        batch_labels.append(class_index[label])
        if len(batch_imgs) == job.batch_size:
            flush()
    flush()

    if not rows:
        raise ExportError("no image in the manifest could be read")
    matrix = np.stack(rows)
    write_fvec(job.out, matrix, np.asarray(labels), class_names)
    sidecar = job.out + ".skipped.txt"
    if skipped:
        with open(sidecar, "w", encoding="utf-8") as fh:
            fh.write("\n".join(skipped) + "\n")
        _log(f"{len(skipped)} unreadable image(s) listed in {sidecar}")
    elif os.path.exists(sidecar):
        os.remove(sidecar)
    _log(f"exported {matrix.shape[0]} rows, d={matrix.shape[1]} "
         f"(backbone channels {backbone.channels}) -> {job.out}")
    return matrix.shape[0]
