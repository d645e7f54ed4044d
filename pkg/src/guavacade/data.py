"""Dataset container, FVEC binary feature files, stratified splitting, and
random undersampling.

FVEC layout (little-endian throughout):

    magic   "FVEC"              4 bytes
    version u8 = 1
    flags   u8                  bit0 = label block present
    reserved u16 = 0
    n       u32
    d       u32
    payload n*d float32, row-major
    if flags bit0:
        labels  n * u32
        class table: K u32, then K * (len u16, UTF-8 bytes)

The label block and class table travel together: a file without bit0 carries
features only and cannot be loaded as a labeled Dataset.
"""

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FileFormatError, InputError
from .rng import substream

FVEC_MAGIC = b"FVEC"
FVEC_VERSION = 1
FLAG_LABELS = 0x01

_HEADER = struct.Struct("<4sBBHII")


@dataclass
class Dataset:
    """Immutable feature matrix with integer labels and class names.

    Features are float32 (the storage precision of feature files); all
    statistics downstream accumulate in float64. Arrays are frozen after
    construction so datasets can be shared across threads.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: list[str]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.class_names = list(self.class_names)
        if self.features.ndim != 2:
            raise InputError(f"features must be 2-d, got shape {self.features.shape}")
        if self.labels.ndim != 1:
            raise InputError("labels must be 1-d")
        if self.features.shape[0] != self.labels.shape[0]:
            raise InputError(
                f"{self.features.shape[0]} feature rows vs {self.labels.shape[0]} labels"
            )
        if len(self.class_names) < 1:
            raise InputError("at least one class name required")
        if len(set(self.class_names)) != len(self.class_names):
            raise InputError("duplicate class names")
        if not all(isinstance(c, str) for c in self.class_names):
            raise InputError("class names must be strings")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise InputError(f"labels must lie in [0, {self.k})")
        if self.features.size and not np.isfinite(self.features).all():
            raise InputError("features contain NaN or Inf")
        self.features.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def k(self) -> int:
        return len(self.class_names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.class_names)


@dataclass
class SplitResult:
    train: Dataset
    holdout: Dataset
    ratio: float
    seed: int
    train_indices: np.ndarray = field(repr=False, default=None)
    holdout_indices: np.ndarray = field(repr=False, default=None)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split(ds: Dataset, ratio: float, seed: int) -> SplitResult:
    """Split per class: round(ratio * n_c) rows (half up) go to train.

    Same (ds, ratio, seed) always yields identical index sets. Output rows
    keep their original relative order.
    """
    if not 0.0 < ratio < 1.0:
        raise InputError(f"ratio must be in (0, 1), got {ratio}")
    counts = ds.class_counts()
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise InputError(f"class {ds.class_names[empty[0]]!r} has no samples")
    train_parts, holdout_parts = [], []
    for c in range(ds.k):
        idx_c = np.flatnonzero(ds.labels == c)
        rng = substream(seed, "split", c)
        shuffled = idx_c[rng.permutation(idx_c.size)]
        n_train = _round_half_up(ratio * idx_c.size)
        train_parts.append(shuffled[:n_train])
        holdout_parts.append(shuffled[n_train:])
    train_idx = np.sort(np.concatenate(train_parts))
    holdout_idx = np.sort(np.concatenate(holdout_parts))
    return SplitResult(
        train=ds.subset(train_idx),
        holdout=ds.subset(holdout_idx),
        ratio=ratio,
        seed=seed,
        train_indices=train_idx,
        holdout_indices=holdout_idx,
    )


def undersample(ds: Dataset, seed: int) -> Dataset:
    """Drop majority-class rows uniformly at random until every class count
    equals the smallest one."""
    counts = ds.class_counts()
    target = int(counts[counts > 0].min()) if counts.any() else 0
    keep_parts = []
    for c in range(ds.k):
        idx_c = np.flatnonzero(ds.labels == c)
        if idx_c.size <= target:
            keep_parts.append(idx_c)
            continue
        rng = substream(seed, "undersample", c)
        chosen = rng.choice(idx_c.size, size=target, replace=False)
        keep_parts.append(idx_c[chosen])
    keep = np.sort(np.concatenate(keep_parts)) if keep_parts else np.array([], dtype=np.int64)
    return ds.subset(keep)


# ---------------------------------------------------------------------------
# FVEC files
# ---------------------------------------------------------------------------

def write_fvec(path, features, labels=None, class_names=None) -> None:
    """Write a raw FVEC file; labels and class table are written together."""
    features = np.asarray(features, dtype="<f4")
    if features.ndim != 2:
        raise InputError("features must be 2-d")
    n, d = features.shape
    flags = 0
    blobs = []
    if labels is not None:
        if class_names is None:
            raise InputError("labels require class_names")
        labels = np.asarray(labels, dtype="<u4")
        if labels.shape != (n,):
            raise InputError("labels length must match feature rows")
        flags |= FLAG_LABELS
        blobs.append(labels.tobytes())
        table = [struct.pack("<I", len(class_names))]
        for name in class_names:
            raw = name.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise InputError(f"class name too long: {name!r}")
            table.append(struct.pack("<H", len(raw)) + raw)
        blobs.append(b"".join(table))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FVEC_MAGIC, FVEC_VERSION, flags, 0, n, d))
        fh.write(features.tobytes())
        for blob in blobs:
            fh.write(blob)


def write_feature_file(ds: Dataset, path) -> None:
    """Write a Dataset as FVEC; read_feature_file reproduces it bit-exactly."""
    write_fvec(path, ds.features, ds.labels, ds.class_names)


def _take(buf: bytes, pos: int, count: int, path, what: str):
    if pos + count > len(buf):
        raise FileFormatError(path, pos, f"truncated: need {count} bytes for {what}")
    return buf[pos : pos + count], pos + count


def _read_label_and_class_blocks(buf, pos, n, path):
    raw, pos = _take(buf, pos, 4 * n, path, f"{n} u32 labels")
    labels = np.frombuffer(raw, dtype="<u4").astype(np.int64)
    table_pos = pos
    raw, pos = _take(buf, pos, 4, path, "class count")
    k = struct.unpack("<I", raw)[0]
    if k < 1:
        raise FileFormatError(path, table_pos, "class count must be >= 1")
    names = []
    for i in range(k):
        raw, pos = _take(buf, pos, 2, path, f"length of class name {i}")
        ln = struct.unpack("<H", raw)[0]
        name_pos = pos
        raw, pos = _take(buf, pos, ln, path, f"class name {i}")
        try:
            names.append(raw.decode("utf-8"))
        except UnicodeDecodeError as e:
            raise FileFormatError(path, name_pos, f"class name {i} is not UTF-8") from e
    if len(set(names)) != len(names):
        raise FileFormatError(path, table_pos, "duplicate class names")
    return labels, names, pos


def _check_labels(labels, k, labels_start, path):
    bad = np.flatnonzero(labels >= k)
    if bad.size:
        i = int(bad[0])
        raise FileFormatError(
            path, labels_start + 4 * i, f"label {int(labels[i])} >= class count {k}"
        )


def read_fvec(path):
    """Read a raw FVEC file -> (features, labels | None, class_names | None)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    raw, pos = _take(buf, 0, _HEADER.size, path, "header")
    magic, version, flags, reserved, n, d = _HEADER.unpack(raw)
    if magic != FVEC_MAGIC:
        raise FileFormatError(path, 0, f"bad magic {magic!r}, expected {FVEC_MAGIC!r}")
    if version != FVEC_VERSION:
        raise FileFormatError(path, 4, f"unsupported version {version}")
    if flags & ~FLAG_LABELS:
        raise FileFormatError(path, 5, f"unknown flag bits 0x{flags:02x}")
    if reserved != 0:
        raise FileFormatError(path, 6, "reserved field must be 0")
    payload_start = pos
    raw, pos = _take(buf, pos, 4 * n * d, path, f"{n}x{d} float32 payload")
    features = np.frombuffer(raw, dtype="<f4").reshape(n, d)
    bad = np.flatnonzero(~np.isfinite(features.ravel()))
    if bad.size:
        raise FileFormatError(path, payload_start + 4 * int(bad[0]), "non-finite feature value")
    labels = class_names = None
    if flags & FLAG_LABELS:
        labels_start = pos
        labels, class_names, pos = _read_label_and_class_blocks(buf, pos, n, path)
        _check_labels(labels, len(class_names), labels_start, path)
    if pos != len(buf):
        raise FileFormatError(path, pos, f"{len(buf) - pos} trailing bytes")
    return features, labels, class_names


def read_feature_file(path) -> Dataset:
    """Read an FVEC file written with labels into a Dataset."""
    features, labels, class_names = read_fvec(path)
    if labels is None:
        raise FileFormatError(path, 5, "file has no label block; cannot load as dataset")
    return Dataset(features, labels, class_names)


# ---------------------------------------------------------------------------
# Manifest files
# ---------------------------------------------------------------------------

@dataclass
class Manifest:
    """(path, label-name) pairs plus the sorted label vocabulary."""

    entries: list[tuple[str, str]]

    @property
    def class_names(self) -> list[str]:
        return sorted({label for _, label in self.entries})

    def label_ids(self) -> np.ndarray:
        index = {name: i for i, name in enumerate(self.class_names)}
        return np.array([index[label] for _, label in self.entries], dtype=np.int64)


def read_manifest(path) -> Manifest:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["path", "label"]:
        raise FileFormatError(path, 0, "manifest must start with header 'path,label'")
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise FileFormatError(path, lineno, f"expected 2 columns, got {len(row)}")
        p, label = row
        if not p:
            raise FileFormatError(path, lineno, "empty path")
        entries.append((p, label))
    return Manifest(entries)


def write_manifest(manifest: Manifest, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label"])
        writer.writerows(manifest.entries)
