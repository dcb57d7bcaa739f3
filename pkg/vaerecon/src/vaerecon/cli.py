"""Standalone command: reconstruct a folder of images through an autoencoder.

Exit codes: 0 at least one image reconstructed; 2 unusable input or
checkpoint/device configuration; 4 internal error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .codecs import BUILTIN_DCT
from .errors import CheckpointUnavailable, DeviceError, NoInputs, VaeReconError
from .recon import DEFAULT_VAE, ReconJob, batch_reconstruct


@click.command(context_settings={"show_default": True})
@click.argument("input_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("output_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--vae", "vae_id", default=DEFAULT_VAE,
              help=f"Checkpoint id, local torch module path, or {BUILTIN_DCT!r}.")
@click.option("--device", type=click.Choice(["cpu", "cuda"]), default="cpu",
              help="Compute device for torch checkpoints.")
@click.option("--batch-size", type=int, default=8,
              help="Images per forward pass (same-shape runs only).")
@click.option("--summary-json", type=click.Path(path_type=Path), default=None,
              help="Write the per-file summary to this JSON file.")
def main(
    input_dir: Path,
    output_dir: Path,
    vae_id: str,
    device: str,
    batch_size: int,
    summary_json: Path | None,
) -> None:
    """Center-crop every image to a multiple of 8 and write its
    autoencoder reconstruction as a stem-matched PNG."""
    try:
        job = ReconJob(input_dir, output_dir, vae_id, device, batch_size)
        summary = batch_reconstruct(job)
    except (NoInputs, CheckpointUnavailable, DeviceError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(2)
    except VaeReconError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(4)
    if summary_json is not None:
        summary_json.write_text(
            json.dumps(
                {"n_ok": summary.n_ok, "n_failed": summary.n_failed,
                 "entries": summary.entries},
                indent=2,
            )
            + "\n"
        )
    click.echo(f"reconstructed {summary.n_ok} images, {summary.n_failed} failed")
    if summary.n_ok == 0:
        sys.exit(2)


if __name__ == "__main__":
    main()
