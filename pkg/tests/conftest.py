import numpy as np
import pytest

from guavacade import Dataset
from guavacade.rng import substream


def make_blobs(n_per_class, d, separation, seed, k=3, names=None) -> Dataset:
    """Isotropic unit-variance Gaussian blobs with equidistant class means
    (pairwise mean distance == separation)."""
    rng = substream(seed, "test-blobs")
    means = np.zeros((k, d))
    for c in range(k):
        means[c, c % d] = separation / np.sqrt(2.0)
    x = np.vstack([rng.normal(means[c], 1.0, (n_per_class, d)) for c in range(k)])
    y = np.repeat(np.arange(k), n_per_class)
    names = names or [f"class_{c}" for c in range(k)]
    return Dataset(x.astype(np.float32), y, names)


@pytest.fixture(scope="session")
def small_blobs() -> Dataset:
    """Well-separated 3-class fixture for fast module tests."""
    return make_blobs(60, 8, 8.0, seed=11)


@pytest.fixture(scope="session")
def desk_blobs() -> Dataset:
    """The desk-scale fixture: 3 classes, n=3000, d=64, mean separation
    tuned so Bayes error is about 5% (2 * Phi(-sep/2) with sep = 3.92)."""
    return make_blobs(1000, 64, 3.92, seed=2024)
