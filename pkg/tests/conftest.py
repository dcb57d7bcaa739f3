"""Shared fixtures: deterministic textured images and the 50-pair corpus.

The corpus mirrors the situation the toolkit is built for: each "real"
image is a quality-85 JPEG of a textured source, and each "recon" is the
uncompressed source itself, so reconstructions carry strictly more
high-frequency energy than their compressed reals.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from dualalign import encode_jpeg
from dualalign.raster import save_png, to_uint8

CORPUS_SIZE = 50
CORPUS_QF = 85
CORPUS_SEED_BASE = 1000


def make_source_image(rng: np.random.Generator, h: int = 96, w: int = 96) -> np.ndarray:
    """Smooth color field plus fine noise: textured but natural-ish."""
    coarse = rng.uniform(60.0, 195.0, size=(h // 16, w // 16, 3))
    smooth = np.asarray(
        Image.fromarray(coarse.astype(np.uint8)).resize((w, h), Image.BICUBIC),
        dtype=np.float64,
    )
    fine = rng.uniform(-20.0, 20.0, size=(h, w, 3))
    return to_uint8(smooth + fine)


def corpus_sources(n: int = CORPUS_SIZE) -> list[np.ndarray]:
    return [
        make_source_image(np.random.default_rng(CORPUS_SEED_BASE + i))
        for i in range(n)
    ]


@pytest.fixture(scope="session")
def sources() -> list[np.ndarray]:
    return corpus_sources()


@pytest.fixture(scope="session")
def corpus_dirs(tmp_path_factory, sources) -> tuple[Path, Path]:
    """(real_dir, recon_dir): 50 stem-matched q85-JPEG / source-PNG pairs."""
    root = tmp_path_factory.mktemp("corpus")
    real_dir = root / "real"
    recon_dir = root / "recon"
    real_dir.mkdir()
    recon_dir.mkdir()
    for i, src in enumerate(sources):
        stem = f"img{i:03d}"
        (real_dir / f"{stem}.jpg").write_bytes(encode_jpeg(src, CORPUS_QF))
        save_png(src, recon_dir / f"{stem}.png")
    return real_dir, recon_dir


@pytest.fixture()
def mini_dirs(tmp_path, sources) -> tuple[Path, Path]:
    """(real_dir, recon_dir) with 6 pairs, rebuilt per test (mutable)."""
    real_dir = tmp_path / "real"
    recon_dir = tmp_path / "recon"
    real_dir.mkdir()
    recon_dir.mkdir()
    for i, src in enumerate(sources[:6]):
        stem = f"img{i:03d}"
        (real_dir / f"{stem}.jpg").write_bytes(encode_jpeg(src, CORPUS_QF))
        save_png(src, recon_dir / f"{stem}.png")
    return real_dir, recon_dir


@pytest.fixture(scope="session")
def jpeg_fixture_bytes(sources) -> list[bytes]:
    """A handful of valid JPEG streams for parser fuzzing."""
    out = []
    for i, q in enumerate((30, 60, 85, 96, 100)):
        out.append(encode_jpeg(sources[i], q))
    out.append(encode_jpeg(sources[5][:, :, 0], 75))  # grayscale stream
    return out
