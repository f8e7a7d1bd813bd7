import os
from pathlib import Path

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
MNIST_DIR = Path(os.environ.get("DEMIAN_MNIST_DIR", REPO_ROOT / "data" / "mnist"))

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte.gz",
    "train_labels": "train-labels-idx1-ubyte.gz",
    "test_images": "t10k-images-idx3-ubyte.gz",
    "test_labels": "t10k-labels-idx1-ubyte.gz",
}


def mnist_paths():
    """Paths to the four MNIST IDX files, preferring .gz but accepting raw."""
    paths = {}
    for key, name in MNIST_FILES.items():
        gz = MNIST_DIR / name
        raw = MNIST_DIR / name.removesuffix(".gz")
        if gz.exists():
            paths[key] = gz
        elif raw.exists():
            paths[key] = raw
        else:
            return None
    return paths


def require_mnist():
    paths = mnist_paths()
    if paths is None:
        pytest.skip(
            f"MNIST IDX files not found under {MNIST_DIR} "
            f"(need {', '.join(MNIST_FILES.values())}); "
            "set DEMIAN_MNIST_DIR or place the files there"
        )
    return paths


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
