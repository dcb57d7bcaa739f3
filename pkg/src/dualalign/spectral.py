"""2-D spectral analysis: orthonormal DCT, block energy grids, masking,
and DFT band errors.

All transforms run in float64; quantization back to 8 bits happens only at
the image-output boundary (:func:`apply_hf_mask_image`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import EmptyBand, NonFinite, OutOfRange, ShapeMismatch, TooSmall, WrongKind
from .raster import to_float, to_uint8

KIND_DCT = "dct2-ortho"
KIND_DFT = "dft"


@dataclass
class SpectrumMap:
    """2-D transform coefficients plus the transform kind that made them."""

    values: np.ndarray
    kind: str

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class BandError:
    """Relative L2 magnitude error split at a radial-frequency cutoff."""

    low_rel_err: float
    high_rel_err: float
    cutoff: float


def _as_plane(plane: np.ndarray) -> np.ndarray:
    arr = to_float(plane)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got shape {arr.shape}")
    return arr


def dct2(plane: np.ndarray) -> SpectrumMap:
    """Orthonormal separable 2-D DCT-II of a plane."""
    arr = _as_plane(plane)
    if not np.all(np.isfinite(arr)):
        raise NonFinite("plane contains non-finite samples")
    return SpectrumMap(scipy.fft.dctn(arr, type=2, norm="ortho"), KIND_DCT)


def idct2(spectrum: SpectrumMap) -> np.ndarray:
    """Inverse of :func:`dct2` (exact up to float64 rounding)."""
    if spectrum.kind != KIND_DCT:
        raise WrongKind(f"expected {KIND_DCT} spectrum, got {spectrum.kind}")
    return scipy.fft.idctn(np.asarray(spectrum.values, dtype=np.float64),
                           type=2, norm="ortho")


def block_dct_energy(plane: np.ndarray, block: int = 8) -> np.ndarray:
    """Mean absolute DCT-II coefficient per in-block position.

    The plane is tiled into non-overlapping ``block x block`` cells
    (trailing partial cells discarded), each cell is transformed with the
    orthonormal DCT-II, and entry (u, v) of the result is the mean of
    |coefficient (u, v)| over all cells. Top-left is the DC term;
    bottom-right is the highest spatial frequency.
    """
    arr = _as_plane(plane)
    if block < 1:
        raise OutOfRange(f"block {block} must be positive")
    h, w = arr.shape
    if h < block or w < block:
        raise TooSmall(f"plane {h}x{w} smaller than one {block}x{block} block")
    nh, nw = h // block, w // block
    tiles = (
        arr[: nh * block, : nw * block]
        .reshape(nh, block, nw, block)
        .transpose(0, 2, 1, 3)
        .reshape(nh * nw, block, block)
    )
    coeffs = scipy.fft.dctn(tiles, type=2, norm="ortho", axes=(1, 2))
    return np.abs(coeffs).mean(axis=0)


def _keep_mask(shape: tuple[int, int], keep_fraction: float) -> np.ndarray:
    h, w = shape
    # Index u maps to fraction u/(H-1): the last index is exactly 1.0, so
    # keep_fraction == 1.0 retains everything. Length-1 axes are never masked.
    fu = np.arange(h) / (h - 1) if h > 1 else np.zeros(h)
    fv = np.arange(w) / (w - 1) if w > 1 else np.zeros(w)
    return (fu[:, None] <= keep_fraction) & (fv[None, :] <= keep_fraction)


def mask_high_freq(spectrum: SpectrumMap, keep_fraction: float) -> SpectrumMap:
    """Zero every coefficient whose row or column fraction exceeds the cutoff.

    Coefficient (u, v) is nulled iff ``u/(H-1) > keep_fraction`` or
    ``v/(W-1) > keep_fraction``; everything else is untouched.
    """
    if spectrum.kind != KIND_DCT:
        raise WrongKind(f"expected {KIND_DCT} spectrum, got {spectrum.kind}")
    if not 0.0 < keep_fraction <= 1.0:
        raise OutOfRange(f"keep_fraction {keep_fraction} outside (0, 1]")
    values = np.asarray(spectrum.values, dtype=np.float64)
    return SpectrumMap(values * _keep_mask(values.shape, keep_fraction), KIND_DCT)


def apply_hf_mask_image(image: np.ndarray, keep_fraction: float) -> np.ndarray:
    """High-frequency-mask an image: per channel, DCT -> mask -> inverse ->
    clamp to [0, 255] -> quantize to 8 bits."""
    arr = to_float(image)
    if arr.ndim == 2:
        return to_uint8(idct2(mask_high_freq(dct2(arr), keep_fraction)))
    if arr.ndim != 3:
        raise ValueError(f"expected HxW or HxWxC raster, got shape {arr.shape}")
    channels = [
        idct2(mask_high_freq(dct2(arr[:, :, c]), keep_fraction))
        for c in range(arr.shape[2])
    ]
    return to_uint8(np.stack(channels, axis=-1))


# --- DFT band errors ----------------------------------------------------------

def radial_band_masks(
    shape: tuple[int, int], cutoff: float
) -> tuple[np.ndarray, np.ndarray]:
    """Boolean (low, high) DFT-bin masks split by normalized radial frequency.

    Frequencies are normalized so the Nyquist rate along either axis is 1.0;
    a bin belongs to the low band iff its radius is <= cutoff.
    """
    if not 0.0 < cutoff < 2.0:
        raise OutOfRange(f"cutoff {cutoff} outside (0, 2)")
    fy = np.fft.fftfreq(shape[0]) / 0.5
    fx = np.fft.fftfreq(shape[1]) / 0.5
    radius = np.hypot(fy[:, None], fx[None, :])
    low = radius <= cutoff
    return low, ~low


def band_errors_from_magnitudes(
    mag_real: np.ndarray, mag_syn: np.ndarray, cutoff: float = 0.5
) -> BandError:
    """Band-wise relative L2 error between two DFT magnitude maps.

    Per band: ``||mag_syn - mag_real||_2 / ||mag_real||_2`` over the band's
    bins. A band whose reference norm is exactly zero yields 0.0 when the
    difference is also zero and +inf otherwise. Raises :class:`EmptyBand`
    when a band holds no bins at this shape/cutoff.
    """
    mag_real = np.asarray(mag_real, dtype=np.float64)
    mag_syn = np.asarray(mag_syn, dtype=np.float64)
    if mag_real.shape != mag_syn.shape:
        raise ShapeMismatch(f"{mag_real.shape} vs {mag_syn.shape}")
    low, high = radial_band_masks(mag_real.shape, cutoff)

    def rel_err(band: np.ndarray, name: str) -> float:
        if not band.any():
            raise EmptyBand(f"{name} band has no bins for shape {mag_real.shape}")
        num = float(np.linalg.norm(mag_syn[band] - mag_real[band]))
        den = float(np.linalg.norm(mag_real[band]))
        if den == 0.0:
            return 0.0 if num == 0.0 else math.inf
        return num / den

    return BandError(rel_err(low, "low"), rel_err(high, "high"), cutoff)


def band_relative_error(
    real: np.ndarray, syn: np.ndarray, cutoff: float = 0.5
) -> BandError:
    """Low/high band relative error of two planes via the centered 2-D DFT."""
    a = _as_plane(real)
    b = _as_plane(syn)
    if a.shape != b.shape:
        raise ShapeMismatch(f"{a.shape} vs {b.shape}")
    return band_errors_from_magnitudes(
        np.abs(np.fft.fft2(a)), np.abs(np.fft.fft2(b)), cutoff
    )
