"""Autoencoder resolution: builtin reference codec and torch checkpoints.

A ``vae_id`` string resolves to an encode/decode round-trip:

* ``builtin:dct`` — a deterministic analytic codec used for offline work
  and testing. It encodes each 8x8 block per channel with the orthonormal
  DCT and keeps only the low 4x4 coefficient corner as the latent (an 8x
  spatial reduction that discards 75% of the coefficients), then inverts.
  No learned weights, no randomness, and a genuine information bottleneck.
* an existing filesystem path — a TorchScript archive or a pickled torch
  module. The module runs one deterministic forward pass; modules exposing
  ``encode``/``decode`` are driven through the latent's distribution mode
  so nothing is ever sampled.
* anything else (for example a hub checkpoint id such as
  ``stabilityai/stable-diffusion-2-1``) raises
  :class:`CheckpointUnavailable` when it cannot be fetched.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.fft

from .errors import CheckpointUnavailable, DeviceError

BUILTIN_DCT = "builtin:dct"
_DCT_KEEP = 4  # kept low-frequency rows/cols per 8x8 block


class BlockDctCodec:
    """Analytic encode/decode pair with an 8x downsampled DCT latent."""

    name = BUILTIN_DCT

    def encode(self, image: np.ndarray) -> np.ndarray:
        """(H, W, C) float in [0, 255] -> (H/8, W/8, C*16) latent."""
        h, w, c = image.shape
        tiles = (
            image.reshape(h // 8, 8, w // 8, 8, c)
            .transpose(0, 2, 4, 1, 3)  # (bh, bw, c, 8, 8)
        )
        coeffs = scipy.fft.dctn(tiles, type=2, norm="ortho", axes=(3, 4))
        kept = coeffs[:, :, :, :_DCT_KEEP, :_DCT_KEEP]
        return kept.reshape(h // 8, w // 8, c * _DCT_KEEP * _DCT_KEEP)

    def decode(self, latent: np.ndarray) -> np.ndarray:
        bh, bw, packed = latent.shape
        c = packed // (_DCT_KEEP * _DCT_KEEP)
        kept = latent.reshape(bh, bw, c, _DCT_KEEP, _DCT_KEEP)
        coeffs = np.zeros((bh, bw, c, 8, 8))
        coeffs[:, :, :, :_DCT_KEEP, :_DCT_KEEP] = kept
        tiles = scipy.fft.idctn(coeffs, type=2, norm="ortho", axes=(3, 4))
        return tiles.transpose(0, 3, 1, 4, 2).reshape(bh * 8, bw * 8, c)

    def roundtrip(self, images: list[np.ndarray]) -> list[np.ndarray]:
        return [self.decode(self.encode(img)) for img in images]


class TorchModuleCodec:
    """One deterministic forward pass through a loaded torch module.

    Input convention: float32 NCHW scaled to [-1, 1]; the output is mapped
    back to [0, 255]. ``batch`` controls how many same-shape images share a
    forward pass.
    """

    def __init__(self, path: Path, device: str, batch_size: int):
        try:
            import torch
        except ImportError as exc:
            raise CheckpointUnavailable(f"torch is not installed: {exc}") from exc
        self._torch = torch
        self.name = str(path)
        self.batch_size = max(1, batch_size)
        if device not in ("cpu", "cuda"):
            raise DeviceError(f"unknown device {device!r}")
        if device == "cuda" and not torch.cuda.is_available():
            raise DeviceError("cuda requested but not available")
        self.device = device
        try:
            try:
                module = torch.jit.load(str(path), map_location=device)
            except (RuntimeError, ValueError):
                module = torch.load(str(path), map_location=device, weights_only=False)
        except Exception as exc:  # torch raises a zoo of load errors
            raise CheckpointUnavailable(f"cannot load {path}: {exc}") from exc
        if not callable(module):
            raise CheckpointUnavailable(f"{path} did not contain a callable module")
        if hasattr(module, "eval"):
            module.eval()
        self.module = module

    def _forward(self, x):
        module = self.module
        if hasattr(module, "encode") and hasattr(module, "decode"):
            z = module.encode(x)
            if hasattr(z, "latent_dist"):  # AutoencoderKL-style output
                z = z.latent_dist.mode()
            elif isinstance(z, (tuple, list)):
                z = z[0]
            out = module.decode(z)
        else:
            out = module(x)
        if hasattr(out, "sample"):
            out = out.sample
        if isinstance(out, (tuple, list)):
            out = out[0]
        return out

    def roundtrip(self, images: list[np.ndarray]) -> list[np.ndarray]:
        torch = self._torch
        results: list[np.ndarray] = []
        i = 0
        with torch.no_grad():
            while i < len(images):
                # Batch only consecutive same-shape images.
                j = i + 1
                while (
                    j < len(images)
                    and j - i < self.batch_size
                    and images[j].shape == images[i].shape
                ):
                    j += 1
                stack = np.stack(images[i:j]).astype(np.float32)
                x = torch.from_numpy(stack).permute(0, 3, 1, 2).to(self.device)
                x = x / 127.5 - 1.0
                out = self._forward(x)
                out = (out.clamp(-1.0, 1.0) + 1.0) * 127.5
                arr = out.permute(0, 2, 3, 1).cpu().numpy().astype(np.float64)
                results.extend(arr[k] for k in range(arr.shape[0]))
                i = j
        return results


def resolve_codec(vae_id: str, device: str = "cpu", batch_size: int = 1):
    """Map a vae_id string to a codec object exposing ``roundtrip``."""
    if vae_id == BUILTIN_DCT:
        return BlockDctCodec()
    path = Path(vae_id)
    if path.exists():
        return TorchModuleCodec(path, device, batch_size)
    raise CheckpointUnavailable(
        f"{vae_id!r} is neither {BUILTIN_DCT!r} nor a local checkpoint path; "
        "remote checkpoint fetching is not available in this build"
    )
