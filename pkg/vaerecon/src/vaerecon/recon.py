"""Reconstruct real images through an autoencoder round-trip.

Outputs are written as PNG (lossless) with filenames matching the input
stems, after center-cropping each input to the largest size that is a
multiple of 8 — the downstream dataset builder matches reconstructions to
reals purely by filename stem, so that contract is load-bearing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .codecs import resolve_codec
from .errors import NoInputs

DEFAULT_VAE = "stabilityai/stable-diffusion-2-1"

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff", ".webp"}


@dataclass(frozen=True)
class ReconJob:
    input_dir: Path
    output_dir: Path
    vae_id: str = DEFAULT_VAE
    device: str = "cpu"
    batch_size: int = 8


@dataclass
class ReconSummary:
    n_ok: int = 0
    n_failed: int = 0
    entries: list[dict] = field(default_factory=list)


def center_crop_multiple(image: np.ndarray, m: int = 8) -> np.ndarray:
    """Largest centered window whose sides are multiples of ``m``; odd
    margins lose the extra row/column at the bottom/right."""
    h, w = image.shape[:2]
    if h < m or w < m:
        raise ValueError(f"image {h}x{w} smaller than {m}x{m}")
    new_h, new_w = (h // m) * m, (w // m) * m
    top, left = (h - new_h) // 2, (w - new_w) // 2
    return image[top : top + new_h, left : left + new_w]


def _quantize(image: np.ndarray) -> np.ndarray:
    return np.clip(np.round(image), 0.0, 255.0).astype(np.uint8)


def reconstruct(image: np.ndarray, vae_id: str, device: str = "cpu") -> np.ndarray:
    """Single encode -> decode pass; dimensions preserved, output uint8.

    The image's sides must already be multiples of 8 (apply
    :func:`center_crop_multiple` first). No noise is injected and the
    latent is never modified, so repeated calls are bit-identical.
    """
    if image.shape[0] % 8 or image.shape[1] % 8:
        raise ValueError(f"dimensions {image.shape[:2]} are not multiples of 8")
    codec = resolve_codec(vae_id, device=device)
    (out,) = codec.roundtrip([image.astype(np.float64)])
    result = _quantize(out)
    assert result.shape == image.shape
    return result


def _load_rgb(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def batch_reconstruct(job: ReconJob) -> ReconSummary:
    """Reconstruct every image in ``job.input_dir`` into stem-matched PNGs.

    Individual file failures are recorded in the summary and never abort
    the batch. Raises :class:`NoInputs` for an empty input directory.
    """
    files = sorted(
        p
        for p in Path(job.input_dir).iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not files:
        raise NoInputs(f"no images in {job.input_dir}")
    codec = resolve_codec(job.vae_id, device=job.device, batch_size=job.batch_size)
    out_dir = Path(job.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    summary = ReconSummary()
    loaded: list[tuple[Path, np.ndarray]] = []
    for path in files:
        try:
            cropped = center_crop_multiple(_load_rgb(path), 8)
            loaded.append((path, cropped.astype(np.float64)))
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            summary.n_failed += 1
            summary.entries.append(
                {"input": str(path), "output": None, "status": f"error: {exc}"}
            )

    outputs = codec.roundtrip([img for _, img in loaded])
    for (path, original), out in zip(loaded, outputs):
        target = out_dir / f"{path.stem}.png"
        Image.fromarray(_quantize(out)).save(target, format="PNG")
        summary.n_ok += 1
        summary.entries.append(
            {
                "input": str(path),
                "output": str(target),
                "status": "ok",
                "height": original.shape[0],
                "width": original.shape[1],
            }
        )
    return summary
