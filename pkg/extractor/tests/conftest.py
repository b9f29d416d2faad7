"""Shared fixtures: a deterministic on-disk image tree and one extraction."""

import numpy as np
import pytest
from PIL import Image

from cdsextract import extract


@pytest.fixture(scope="session")
def image_tree(tmp_path_factory):
    """24 small PNGs in three class folders, pixels from a fixed seed."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(4242)
    for name in ("cats", "dogs", "newts"):
        sub = root / name
        sub.mkdir()
        for i in range(8):
            arr = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
            Image.fromarray(arr).save(sub / f"img_{i:02d}.png")
    return root


@pytest.fixture(scope="session")
def extracted(image_tree, tmp_path_factory):
    out = tmp_path_factory.mktemp("extracted")
    manifest = extract(image_tree, "resnet18", out, batch_size=8, seed=0)
    return manifest, out
