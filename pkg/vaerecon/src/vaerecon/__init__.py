"""Autoencoder reconstruction of image folders (stem-matched PNG outputs)."""

from __future__ import annotations

__version__ = "0.1.0"

from .codecs import BUILTIN_DCT, resolve_codec
from .errors import CheckpointUnavailable, DeviceError, NoInputs, VaeReconError
from .recon import (
    DEFAULT_VAE,
    ReconJob,
    ReconSummary,
    batch_reconstruct,
    center_crop_multiple,
    reconstruct,
)

__all__ = [
    "BUILTIN_DCT",
    "DEFAULT_VAE",
    "CheckpointUnavailable",
    "DeviceError",
    "NoInputs",
    "ReconJob",
    "ReconSummary",
    "VaeReconError",
    "batch_reconstruct",
    "center_crop_multiple",
    "reconstruct",
    "resolve_codec",
    "__version__",
]
