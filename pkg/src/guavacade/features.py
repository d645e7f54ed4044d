"""Image preprocessing, global average pooling, the baseline histogram
extractor, and FMAP feature-map files.

The baseline extractor exists so the whole pipeline runs end to end with no
deep backbone: 32 intensity-histogram bins per channel plus per-channel mean
and standard deviation. Deep feature maps produced elsewhere arrive through
FMAP files and are pooled here.

FMAP layout mirrors FVEC: magic "FMAP", version u8 = 1, flags u8 (bit0 =
labels), reserved u16, then n/h/w/d u32, n*h*w*d float32 in (sample, row,
col, channel) order, then the optional label + class blocks exactly as FVEC.
"""

import struct

import numpy as np

from .data import _read_label_and_class_blocks, _check_labels, _take
from .errors import FileFormatError, InputError

FMAP_MAGIC = b"FMAP"
FMAP_VERSION = 1
FLAG_LABELS = 0x01

_FMAP_HEADER = struct.Struct("<4sBBHIIII")

HISTOGRAM_BINS = 32
_BIN_EDGES = np.linspace(0.0, 1.0, HISTOGRAM_BINS + 1)


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------

def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel centers (corner alignment off)."""
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


def preprocess_image(raw: np.ndarray, target: int = 224) -> np.ndarray:
    """Scale a [0, 255]-valued image to target x target and rescale by 1/255.

    Output values lie in [0, 1]; channel count is preserved.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim == 2:
        raw = raw[:, :, None]
    if raw.ndim != 3:
        raise InputError(f"image must be HxWxC, got shape {raw.shape}")
    if raw.shape[0] < 1 or raw.shape[1] < 1 or raw.size == 0:
        raise InputError("empty image")
    if raw.shape[2] not in (1, 3):
        raise InputError(f"channel count must be 1 or 3, got {raw.shape[2]}")
    if target < 1:
        raise InputError("target side must be >= 1")
    return resize_bilinear(raw, target, target) / 255.0


# ---------------------------------------------------------------------------
# Pooling and the baseline extractor
# ---------------------------------------------------------------------------

def gap(fmap: np.ndarray) -> np.ndarray:
    """Spatial mean per channel: h x w x d -> d, accumulated in float64."""
    fmap = np.asarray(fmap)
    if fmap.ndim != 3 or min(fmap.shape) < 1:
        raise InputError(f"feature map must be h x w x d with all dims >= 1, got {fmap.shape}")
    if not np.isfinite(fmap).all():
        raise InputError("feature map contains NaN or Inf")
    return fmap.mean(axis=(0, 1), dtype=np.float64)


def gap_batch(maps: np.ndarray) -> np.ndarray:
    """gap() over an n x h x w x d stack, same accumulation order per sample."""
    maps = np.asarray(maps)
    if maps.ndim != 4:
        raise InputError("expected n x h x w x d stack")
    return maps.mean(axis=(1, 2), dtype=np.float64)


def baseline_histogram_features(img: np.ndarray) -> np.ndarray:
    """Per-channel 32-bin intensity histograms plus per-channel mean/std.

    Input must already be preprocessed (values in [0, 1]). Output is
    [hist(ch 0) .. hist(ch C-1), means, stds], so d = 32*C + 2*C. Each
    channel histogram sums to 1; std is the population value.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.size == 0:
        raise InputError("expected a non-empty HxWxC image")
    if img.min() < 0.0 or img.max() > 1.0:
        raise InputError("image values must lie in [0, 1]; run preprocess_image first")
    c = img.shape[2]
    n_pix = img.shape[0] * img.shape[1]
    hists = []
    for ch in range(c):
        counts, _ = np.histogram(img[:, :, ch], bins=_BIN_EDGES)
        hists.append(counts / n_pix)
    means = img.reshape(-1, c).mean(axis=0)
    stds = img.reshape(-1, c).std(axis=0)
    return np.concatenate(hists + [means, stds])


# ---------------------------------------------------------------------------
# FMAP files
# ---------------------------------------------------------------------------

def write_feature_map_file(path, maps, labels=None, class_names=None) -> None:
    maps = np.asarray(maps, dtype="<f4")
    if maps.ndim != 4:
        raise InputError("maps must be n x h x w x d")
    n, h, w, d = maps.shape
    if min(h, w, d) < 1:
        raise InputError("map dims h, w, d must all be >= 1")
    flags = 0
    blobs = []
    if labels is not None:
        if class_names is None:
            raise InputError("labels require class_names")
        labels = np.asarray(labels, dtype="<u4")
        if labels.shape != (n,):
            raise InputError("labels length must match map count")
        flags |= FLAG_LABELS
        blobs.append(labels.tobytes())
        table = [struct.pack("<I", len(class_names))]
        for name in class_names:
            raw = name.encode("utf-8")
            table.append(struct.pack("<H", len(raw)) + raw)
        blobs.append(b"".join(table))
    with open(path, "wb") as fh:
        fh.write(_FMAP_HEADER.pack(FMAP_MAGIC, FMAP_VERSION, flags, 0, n, h, w, d))
        fh.write(maps.tobytes())
        for blob in blobs:
            fh.write(blob)


def read_feature_map_file(path):
    """Read an FMAP file -> (maps n x h x w x d, labels | None, class_names | None)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    raw, pos = _take(buf, 0, _FMAP_HEADER.size, path, "header")
    magic, version, flags, reserved, n, h, w, d = _FMAP_HEADER.unpack(raw)
    if magic != FMAP_MAGIC:
        raise FileFormatError(path, 0, f"bad magic {magic!r}, expected {FMAP_MAGIC!r}")
    if version != FMAP_VERSION:
        raise FileFormatError(path, 4, f"unsupported version {version}")
    if flags & ~FLAG_LABELS:
        raise FileFormatError(path, 5, f"unknown flag bits 0x{flags:02x}")
    if min(h, w, d) < 1:
        raise FileFormatError(path, 12, "map dims h, w, d must all be >= 1")
    payload_start = pos
    raw, pos = _take(buf, pos, 4 * n * h * w * d, path, "float32 map payload")
    maps = np.frombuffer(raw, dtype="<f4").reshape(n, h, w, d)
    bad = np.flatnonzero(~np.isfinite(maps.ravel()))
    if bad.size:
        raise FileFormatError(path, payload_start + 4 * int(bad[0]), "non-finite map value")
    labels = class_names = None
    if flags & FLAG_LABELS:
        labels_start = pos
        labels, class_names, pos = _read_label_and_class_blocks(buf, pos, n, path)
        _check_labels(labels, len(class_names), labels_start, path)
    if pos != len(buf):
        raise FileFormatError(path, pos, f"{len(buf) - pos} trailing bytes")
    return maps, labels, class_names


# ---------------------------------------------------------------------------
# PPM images (P6 binary RGB, P5 binary grayscale)
# ---------------------------------------------------------------------------

def read_ppm(path) -> np.ndarray:
    """Load a binary PPM/PGM file as a uint8 HxWxC array."""
    with open(path, "rb") as fh:
        buf = fh.read()
    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(buf):
            if buf[pos : pos + 1].isspace():
                pos += 1
            elif buf[pos : pos + 1] == b"#":
                while pos < len(buf) and buf[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FileFormatError(path, start, "unexpected end of PPM header")
        return buf[start:pos]

    magic = next_token()
    if magic not in (b"P6", b"P5"):
        raise FileFormatError(path, 0, f"unsupported PPM magic {magic!r}")
    channels = 3 if magic == b"P6" else 1
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as e:
        raise FileFormatError(path, pos, "malformed PPM header") from e
    if maxval != 255:
        raise FileFormatError(path, pos, f"only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = width * height * channels
    raw, pos = _take(buf, pos, expected, path, "pixel payload")
    if pos != len(buf):
        raise FileFormatError(path, pos, f"{len(buf) - pos} trailing bytes")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, channels)


def write_ppm(path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels, dtype=np.uint8)
    if pixels.ndim == 2:
        pixels = pixels[:, :, None]
    if pixels.shape[2] == 3:
        magic = b"P6"
    elif pixels.shape[2] == 1:
        magic = b"P5"
    else:
        raise InputError("PPM supports 1 or 3 channels")
    h, w = pixels.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n%d %d\n255\n" % (w, h))
        fh.write(pixels.tobytes())
