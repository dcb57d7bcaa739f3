"""Pixel raster helpers: loading, saving, dtype conversion, luma.

The toolkit passes images around as numpy arrays: ``(H, W, 3)`` uint8 for
decoded pictures and 2-D float64 planes for analysis. All float-to-8-bit
conversion goes through :func:`to_uint8` so the rounding policy
(half away from zero, then clamp) is applied in exactly one place.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import MalformedStream

# BT.601 luma weights.
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def to_float(image: np.ndarray) -> np.ndarray:
    """Promote a raster to float64 without rescaling (8-bit units kept)."""
    return np.asarray(image, dtype=np.float64)


def to_uint8(values: np.ndarray) -> np.ndarray:
    """Quantize float samples to 8 bits: round half away from zero, clamp."""
    values = np.asarray(values, dtype=np.float64)
    rounded = np.trunc(values + np.copysign(0.5, values))
    return np.clip(rounded, 0.0, 255.0).astype(np.uint8)


def luma(image: np.ndarray) -> np.ndarray:
    """BT.601 luma plane (float64) of an RGB raster; 2-D input passes through."""
    arr = to_float(image)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr @ _LUMA_WEIGHTS
    raise ValueError(f"expected HxW or HxWx3 raster, got shape {arr.shape}")


def decode_image_bytes(data: bytes) -> np.ndarray:
    """Decode any PIL-readable image byte stream to an (H, W, 3) uint8 array."""
    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise MalformedStream(f"cannot decode image bytes: {exc}") from exc


def load_image(path: str | Path) -> np.ndarray:
    """Load an image file as an (H, W, 3) uint8 array."""
    return decode_image_bytes(Path(path).read_bytes())


def save_png(image: np.ndarray, path: str | Path) -> None:
    """Write a raster as PNG (lossless). Output is bit-deterministic."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    Image.fromarray(arr).save(Path(path), format="PNG")


def png_bytes(image: np.ndarray) -> bytes:
    """PNG-encode a raster in memory."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()
