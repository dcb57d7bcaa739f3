"""Structured errors of the reconstruction tool."""

from __future__ import annotations


class VaeReconError(Exception):
    """Base class for all structured errors."""


class CheckpointUnavailable(VaeReconError):
    """The requested autoencoder checkpoint cannot be resolved or loaded."""


class DeviceError(VaeReconError):
    """The requested compute device is unknown or not usable."""


class NoInputs(VaeReconError):
    """The input directory holds no readable images."""
