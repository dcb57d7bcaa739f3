"""Pair alignment pipeline: center crop, matched recompression, pixel mixup.

A reconstructed counterpart of a real image is pulled toward that real
image in two stages. First its spectrum is matched by re-encoding it with
the same JPEG quality the real image went through (estimated from the real
stream's quantization tables). Second, the pixels are blended toward the
real image by a convex mixup with a randomly drawn ratio. Both stages fire
stochastically, gated by per-stage probabilities drawn from one seeded
stream in a fixed order: frequency gate, pixel gate, then (only when the
pixel gate fires) the mixup ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage
from PIL import Image

from . import jpeg
from .errors import OutOfRange, ShapeMismatch, TooSmall
from .raster import decode_image_bytes, to_float, to_uint8

FALLBACK_SKIP = "skip"
FALLBACK_USE_QF = "use_fallback_qf"


@dataclass(frozen=True)
class AlignConfig:
    """Hyperparameters of the alignment pipeline.

    r_pixel_max      upper bound of the uniform mixup-ratio draw U(0, r_pixel_max)
    p_pixel          probability that the pixel-mixup stage fires
    p_freq           probability that the recompression stage fires
    fallback_qf      quality used for non-JPEG reals when mode is use_fallback_qf
    freq_fallback_mode  "use_fallback_qf" or "skip" for non-JPEG reals
    subsampling      chroma subsampling of the re-encode ("4:2:0", "4:2:2", "4:4:4")
    emit_compressed_bytes  keep the exact encoder bytes on the sample when
                     they still equal the final pixels
    seed             global seed; dataset builds derive per-pair streams from it
    """

    r_pixel_max: float = 0.5
    p_pixel: float = 0.5
    p_freq: float = 0.5
    fallback_qf: int = 96
    freq_fallback_mode: str = FALLBACK_USE_QF
    subsampling: str = "4:2:0"
    emit_compressed_bytes: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("r_pixel_max", "p_pixel", "p_freq"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise OutOfRange(f"{name} {v} outside [0, 1]")
        if not 1 <= self.fallback_qf <= 100:
            raise OutOfRange(f"fallback_qf {self.fallback_qf} outside [1, 100]")
        if self.freq_fallback_mode not in (FALLBACK_SKIP, FALLBACK_USE_QF):
            raise OutOfRange(
                f"freq_fallback_mode {self.freq_fallback_mode!r} not one of "
                f"({FALLBACK_SKIP!r}, {FALLBACK_USE_QF!r})"
            )
        if not 0 <= self.seed < 2**64:
            raise OutOfRange(f"seed {self.seed} outside [0, 2^64)")


@dataclass
class AlignedSample:
    """One aligned output image plus the provenance of how it was made."""

    image: np.ndarray
    applied_freq: bool
    applied_pixel: bool
    qf_used: int | None
    r_pixel_used: float | None
    source_real: str = ""
    source_recon: str = ""
    # Exact encoder output, present only when it is byte-equivalent to
    # `image` (recompression fired and mixup did not change the pixels).
    jpeg_bytes: bytes | None = field(default=None, repr=False)

    def provenance(self) -> dict:
        return {
            "applied_freq": self.applied_freq,
            "applied_pixel": self.applied_pixel,
            "qf_used": self.qf_used,
            "r_pixel_used": self.r_pixel_used,
            "source_real": self.source_real,
            "source_recon": self.source_recon,
        }


def center_crop_multiple(image: np.ndarray, m: int = 8) -> np.ndarray:
    """Center-crop to the largest size that is a multiple of ``m`` per axis.

    When a margin is odd the extra row/column is taken from the
    bottom/right.
    """
    arr = np.asarray(image)
    if m < 1:
        raise OutOfRange(f"multiple {m} must be positive")
    h, w = arr.shape[:2]
    if h < m or w < m:
        raise TooSmall(f"image {h}x{w} smaller than {m}x{m}")
    new_h, new_w = (h // m) * m, (w // m) * m
    top, left = (h - new_h) // 2, (w - new_w) // 2
    return arr[top : top + new_h, left : left + new_w]


def frequency_align(
    recon: np.ndarray, qf: int, subsampling: str = "4:2:0"
) -> np.ndarray:
    """Round-trip a reconstruction through JPEG at the matched quality."""
    return _compress_roundtrip(recon, qf, subsampling)[1]


def _compress_roundtrip(
    image: np.ndarray, qf: int, subsampling: str
) -> tuple[bytes, np.ndarray]:
    data = jpeg.encode_jpeg(image, qf, subsampling)
    return data, jpeg.decode_jpeg(data)


def sample_mixup_ratio(rng: np.random.Generator, r_max: float) -> float:
    """Draw the mixup ratio from U(0, r_max); always 0.0 when r_max == 0."""
    if not 0.0 <= r_max <= 1.0:
        raise OutOfRange(f"r_max {r_max} outside [0, 1]")
    return float(rng.uniform(0.0, r_max))


def pixel_mixup_float(real: np.ndarray, syn: np.ndarray, r: float) -> np.ndarray:
    """Convex blend ``r * real + (1 - r) * syn`` in float64, no quantization."""
    if not 0.0 <= r <= 1.0:
        raise OutOfRange(f"mixup ratio {r} outside [0, 1]")
    a, b = to_float(real), to_float(syn)
    if a.shape != b.shape:
        raise ShapeMismatch(f"{a.shape} vs {b.shape}")
    return r * a + (1.0 - r) * b


def pixel_mixup(real: np.ndarray, syn: np.ndarray, r: float) -> np.ndarray:
    """8-bit variant of :func:`pixel_mixup_float`: round half away from
    zero, clamp to [0, 255]. Endpoints are exact: r=1 returns the real
    pixels, r=0 the synthetic ones."""
    return to_uint8(pixel_mixup_float(real, syn, r))


def align_pair(
    real_bytes: bytes,
    recon: np.ndarray,
    config: AlignConfig,
    rng: np.random.Generator,
    source_real: str = "",
    source_recon: str = "",
) -> AlignedSample:
    """Produce one aligned synthetic sample from a (real, recon) pair.

    The real image is decoded and center-cropped to a multiple of 8; the
    reconstruction must already have exactly those dimensions. The output
    always carries the synthetic label downstream regardless of how close
    the blend gets to the real pixels.
    """
    real = center_crop_multiple(decode_image_bytes(real_bytes), 8)
    recon_arr = np.asarray(recon)
    if recon_arr.dtype != np.uint8:
        recon_arr = to_uint8(recon_arr)
    if real.shape != recon_arr.shape:
        raise ShapeMismatch(
            f"recon {recon_arr.shape} vs center-cropped real {real.shape}"
        )

    # Fixed draw order keeps results reproducible for a given (config, rng).
    gate_freq = rng.random() < config.p_freq
    gate_pixel = rng.random() < config.p_pixel

    current = recon_arr
    applied_freq = False
    qf_used: int | None = None
    enc_bytes: bytes | None = None
    freq_decoded: np.ndarray | None = None
    if gate_freq:
        if jpeg.is_jpeg(real_bytes):
            qf_used = jpeg.estimate_quality(
                jpeg.extract_quant_tables(real_bytes)
            ).quality
        elif config.freq_fallback_mode == FALLBACK_USE_QF:
            qf_used = config.fallback_qf
        if qf_used is not None:
            enc_bytes, current = _compress_roundtrip(
                current, qf_used, config.subsampling
            )
            freq_decoded = current
            applied_freq = True

    applied_pixel = False
    r_used: float | None = None
    if gate_pixel:
        r_used = sample_mixup_ratio(rng, config.r_pixel_max)
        current = pixel_mixup(real, current, r_used)
        applied_pixel = True

    keep_bytes = (
        config.emit_compressed_bytes
        and applied_freq
        and (not applied_pixel or np.array_equal(current, freq_decoded))
    )
    return AlignedSample(
        image=current,
        applied_freq=applied_freq,
        applied_pixel=applied_pixel,
        qf_used=qf_used if applied_freq else None,
        r_pixel_used=r_used,
        source_real=source_real,
        source_recon=source_recon,
        jpeg_bytes=enc_bytes if keep_bytes else None,
    )


# --- robustness perturbations --------------------------------------------------

def perturb_jpeg(image: np.ndarray, quality: int) -> np.ndarray:
    """JPEG round-trip at the given quality."""
    return frequency_align(image, quality)


def perturb_resize(image: np.ndarray, scale: float) -> np.ndarray:
    """Bilinear rescale by ``scale`` then bilinear back to the original size."""
    if scale <= 0:
        raise OutOfRange(f"scale {scale} must be positive")
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    h, w = arr.shape[:2]
    mid_w, mid_h = max(1, round(w * scale)), max(1, round(h * scale))
    im = Image.fromarray(arr)
    mid = im.resize((mid_w, mid_h), Image.BILINEAR)
    return np.asarray(mid.resize((w, h), Image.BILINEAR))


def perturb_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian blur with kernel radius ceil(3*sigma), edges clamped."""
    if sigma < 0:
        raise OutOfRange(f"sigma {sigma} must be non-negative")
    arr = np.asarray(image)
    if sigma == 0:
        return arr.copy()
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= kernel.sum()
    out = to_float(arr)
    # Separable pass; 'nearest' replicates the edge sample.
    out = scipy.ndimage.convolve1d(out, kernel, axis=0, mode="nearest")
    out = scipy.ndimage.convolve1d(out, kernel, axis=1, mode="nearest")
    return to_uint8(out) if arr.dtype == np.uint8 else out


def perturb(image: np.ndarray, kind: str, amount: float) -> np.ndarray:
    """Dispatch a named perturbation: jpeg(quality) | resize(scale) | blur(sigma)."""
    if kind == "jpeg":
        return perturb_jpeg(image, int(amount))
    if kind == "resize":
        return perturb_resize(image, float(amount))
    if kind == "blur":
        return perturb_blur(image, float(amount))
    raise OutOfRange(f"unknown perturbation kind {kind!r}")
