"""FVEC feature-file writer.

This is the wire format the downstream classifier pipeline consumes
(little-endian): magic "FVEC", version u8 = 1, flags u8 (bit0 = labels
present), reserved u16 = 0, n u32, d u32, n*d float32 row-major, then n u32
labels and a class table of K u32 followed by K (len u16, UTF-8 bytes)
entries.
"""

import struct

import numpy as np

MAGIC = b"FVEC"
VERSION = 1
FLAG_LABELS = 0x01

_HEADER = struct.Struct("<4sBBHII")


def write_fvec(path, features: np.ndarray, labels, class_names) -> None:
    features = np.ascontiguousarray(features, dtype="<f4")
    if features.ndim != 2:
        raise ValueError("features must be 2-d")
    n, d = features.shape
    labels = np.asarray(labels, dtype="<u4")
    if labels.shape != (n,):
        raise ValueError("labels length must match feature rows")
    table = [struct.pack("<I", len(class_names))]
    for name in class_names:
        raw = name.encode("utf-8")
        table.append(struct.pack("<H", len(raw)) + raw)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, FLAG_LABELS, 0, n, d))
        fh.write(features.tobytes())
        fh.write(labels.tobytes())
        fh.write(b"".join(table))
