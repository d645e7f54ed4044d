import csv

import numpy as np
import pytest
from PIL import Image

from guava_exporter import load_backbone


@pytest.fixture(scope="session")
def backbone():
    """Seeded random-init backbone: deterministic and offline."""
    return load_backbone("none")


def write_image(path, pixels: np.ndarray) -> None:
    Image.fromarray(pixels.astype(np.uint8)).save(path)


def write_manifest(path, entries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label"])
        writer.writerows(entries)


@pytest.fixture
def image_manifest(tmp_path):
    """Four small images in two classes, plus the manifest describing them."""
    rng = np.random.default_rng(7)
    img_dir = tmp_path / "images"
    img_dir.mkdir()
    entries = []
    for i, label in enumerate(["anthracnose", "healthy", "anthracnose", "healthy"]):
        name = f"img_{i}.png"
        write_image(img_dir / name, rng.integers(0, 256, size=(48, 40, 3)))
        entries.append((f"images/{name}", label))
    manifest = tmp_path / "manifest.csv"
    write_manifest(manifest, entries)
    return manifest, entries
