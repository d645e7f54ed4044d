"""Manifest reading and the pinned preprocessing contract.

Preprocessing is fixed to what the classifier pipeline expects: bilinear
resize to side x side with half-pixel centers, then pixel rescale by 1/255.
No ImageNet mean/std normalization and no library transform stacks, so the
exporter and the downstream baseline extractor share one contract.
"""

import csv

import numpy as np
from PIL import Image


def read_manifest(path):
    """CSV with header 'path,label' -> (entries, sorted class names)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["path", "label"]:
        raise ValueError(f"{path}: manifest must start with header 'path,label'")
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2 or not row[0]:
            raise ValueError(f"{path}:{lineno}: expected 'path,label' with non-empty path")
        entries.append((row[0], row[1]))
    class_names = sorted({label for _, label in entries})
    return entries, class_names


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample with half-pixel centers (corner alignment off)."""
    h, w = img.shape[:2]
    ys = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0.0, w - 1.0)
    y0 = ys.astype(np.int64)
    x0 = xs.astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    img = np.asarray(img, dtype=np.float64)
    top = img[np.ix_(y0, x0)] * (1.0 - wx) + img[np.ix_(y0, x1)] * wx
    bottom = img[np.ix_(y1, x0)] * (1.0 - wx) + img[np.ix_(y1, x1)] * wx
    return top * (1.0 - wy) + bottom * wy


def load_and_preprocess(path, side: int) -> np.ndarray:
    """Image file -> float32 CHW array in [0, 1], side x side, RGB."""
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
    if rgb.size == 0:
        raise ValueError(f"{path}: empty image")
    scaled = resize_bilinear(rgb, side, side) / 255.0
    return scaled.transpose(2, 0, 1).astype(np.float32)
