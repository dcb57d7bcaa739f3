"""Fixture images: textured, odd-sized so the center crop does real work."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

SIZES = [
    (100, 108), (97, 103), (96, 96), (120, 88), (89, 121),
    (104, 104), (99, 96), (112, 95), (96, 111), (101, 101),
]


def make_image(seed: int, h: int, w: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    coarse = rng.uniform(60.0, 195.0, size=(max(1, h // 16), max(1, w // 16), 3))
    smooth = np.asarray(
        Image.fromarray(coarse.astype(np.uint8)).resize((w, h), Image.BICUBIC),
        dtype=np.float64,
    )
    fine = rng.uniform(-20.0, 20.0, size=(h, w, 3))
    return np.clip(np.round(smooth + fine), 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def fixture_images() -> list[np.ndarray]:
    return [make_image(5000 + i, h, w) for i, (h, w) in enumerate(SIZES)]


@pytest.fixture()
def input_dir(tmp_path, fixture_images) -> Path:
    src = tmp_path / "inputs"
    src.mkdir()
    for i, img in enumerate(fixture_images):
        Image.fromarray(img).save(src / f"photo{i:02d}.png")
    return src
