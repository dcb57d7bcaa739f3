"""Command-line surface of the toolkit.

Exit codes are a stable contract:
  0  success
  2  input error (missing/unreadable paths, malformed streams, no pairs)
  3  validation error (bad argument domains, shape mismatches)
  4  internal error

Spectrum CSV schema: header row ``u,v0,...,v{block-1}`` followed by one row
per vertical frequency index u; cell (u, vK) is the mean absolute DCT
coefficient at in-block position (u, K). Report CSV columns are
``pair_id,variant,mse,low_rel_err,high_rel_err,qf_estimate,qf_exact``.
Randomized subcommands never read wall-clock entropy: --seed defaults to 0.
The only environment override is DUALALIGN_OUT_DIR, which substitutes the
output directory of ``mask-hf`` and ``report``.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, dataset, figures, jpeg, metrics
from .align import FALLBACK_SKIP, FALLBACK_USE_QF, AlignConfig, align_pair
from .errors import (
    AmbiguousMatch,
    DualAlignError,
    EmptyBand,
    MalformedStream,
    ManifestCorrupt,
    MissingFile,
    MissingTables,
    NoPairs,
    NonFinite,
    OutOfRange,
    ShapeMismatch,
    TooSmall,
    UnsupportedMode,
    WrongKind,
)
from .raster import load_image, luma, save_png
from .spectral import apply_hf_mask_image, block_dct_energy

EXIT_INPUT = 2
EXIT_VALIDATION = 3
EXIT_INTERNAL = 4

_INPUT_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    MalformedStream,
    MissingTables,
    UnsupportedMode,
    NoPairs,
    MissingFile,
    ManifestCorrupt,
)
_VALIDATION_ERRORS = (
    OutOfRange,
    TooSmall,
    ShapeMismatch,
    NonFinite,
    WrongKind,
    EmptyBand,
    AmbiguousMatch,
)


def _run(fn, *args, **kwargs):
    """Run a command body, mapping structured errors to the exit-code contract."""
    try:
        return fn(*args, **kwargs)
    except _VALIDATION_ERRORS as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except _INPUT_ERRORS as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    except DualAlignError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INTERNAL)


@click.group(context_settings={"show_default": True})
@click.version_option(version=__version__)
def main() -> None:
    """Dataset alignment toolkit: JPEG quality forensics, spectral analysis,
    and deterministic aligned-dataset builds."""


# --- estimate-qf -----------------------------------------------------------------

def _qf_rows(paths: tuple[Path, ...]):
    files: list[Path] = []
    for p in paths:
        if p.is_dir():
            files.extend(sorted(q for q in p.iterdir() if q.is_file()))
        elif p.is_file():
            files.append(p)
        else:
            raise FileNotFoundError(f"{p} does not exist")
    for f in files:
        data = f.read_bytes()
        if jpeg.is_jpeg(data):
            est = jpeg.estimate_quality(jpeg.extract_quant_tables(data))
            yield (str(f), str(est.quality), str(est.distance), str(est.exact).lower())
        else:
            yield (str(f), "none", "-", "-")


@main.command("estimate-qf")
@click.argument("paths", nargs=-1, required=True, type=click.Path(path_type=Path))
@click.option("--csv", "csv_out", type=click.Path(path_type=Path), default=None,
              help="Also write the table to this CSV file.")
def cmd_estimate_qf(paths: tuple[Path, ...], csv_out: Path | None) -> None:
    """Estimate the JPEG quality factor of files (or directories of files)."""

    def body() -> None:
        rows = list(_qf_rows(paths))
        header = ("file", "quality", "distance", "exact")
        click.echo(",".join(header))
        for row in rows:
            click.echo(",".join(row))
        if csv_out is not None:
            with open(csv_out, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows(rows)

    _run(body)


# --- align -----------------------------------------------------------------------

@main.command("align")
@click.argument("real", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("recon", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-o", "--output", type=click.Path(path_type=Path), required=True,
              help="Output image path (.png, or .jpg with --emit-compressed).")
@click.option("--provenance", type=click.Path(path_type=Path), default=None,
              help="Write the applied-stage record as JSON.")
@click.option("--p-freq", type=float, default=AlignConfig.p_freq,
              help="Probability of the recompression stage.")
@click.option("--p-pixel", type=float, default=AlignConfig.p_pixel,
              help="Probability of the pixel-mixup stage.")
@click.option("--r-pixel-max", type=float, default=AlignConfig.r_pixel_max,
              help="Upper bound of the uniform mixup-ratio draw.")
@click.option("--fallback-qf", type=int, default=AlignConfig.fallback_qf,
              help="Quality used for non-JPEG reals in use_fallback_qf mode.")
@click.option("--freq-fallback-mode",
              type=click.Choice([FALLBACK_USE_QF, FALLBACK_SKIP]),
              default=AlignConfig.freq_fallback_mode,
              help="What the recompression stage does when the real is not JPEG.")
@click.option("--subsampling", type=click.Choice(["4:2:0", "4:2:2", "4:4:4"]),
              default=AlignConfig.subsampling, help="Chroma subsampling of the re-encode.")
@click.option("--emit-compressed/--no-emit-compressed",
              default=AlignConfig.emit_compressed_bytes,
              help="Persist the exact encoder bytes when they equal the result.")
@click.option("--seed", type=int, default=AlignConfig.seed, help="RNG seed.")
def cmd_align(
    real: Path,
    recon: Path,
    output: Path,
    provenance: Path | None,
    p_freq: float,
    p_pixel: float,
    r_pixel_max: float,
    fallback_qf: int,
    freq_fallback_mode: str,
    subsampling: str,
    emit_compressed: bool,
    seed: int,
) -> None:
    """Align one reconstruction against its real source image."""

    def body() -> None:
        config = AlignConfig(
            r_pixel_max=r_pixel_max,
            p_pixel=p_pixel,
            p_freq=p_freq,
            fallback_qf=fallback_qf,
            freq_fallback_mode=freq_fallback_mode,
            subsampling=subsampling,
            emit_compressed_bytes=emit_compressed,
            seed=seed,
        )
        rng = np.random.Generator(np.random.PCG64(seed))
        sample = align_pair(
            real.read_bytes(),
            load_image(recon),
            config,
            rng,
            source_real=str(real),
            source_recon=str(recon),
        )
        if not sample.applied_freq and not sample.applied_pixel:
            # Nothing fired: pass the reconstruction through untouched.
            output.write_bytes(recon.read_bytes())
        elif sample.jpeg_bytes is not None:
            output.write_bytes(sample.jpeg_bytes)
        else:
            save_png(sample.image, output)
        if provenance is not None:
            record = {"seed": seed, "output": str(output), **sample.provenance()}
            provenance.write_text(json.dumps(record, indent=2) + "\n")
        click.echo(f"wrote {output}")

    _run(body)


# --- spectrum ----------------------------------------------------------------------

@main.command("spectrum")
@click.argument("image", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--block", type=int, default=8, help="Block size of the energy grid.")
@click.option("--out-csv", type=click.Path(path_type=Path), default=None,
              help="Grid CSV path. [default: <image>.spectrum.csv]")
@click.option("--out-png", type=click.Path(path_type=Path), default=None,
              help="Heatmap PNG path. [default: <image>.spectrum.png]")
@click.option("--log/--linear", "log_scale", default=True,
              help="Heatmap intensity mapping: log(1+energy) or linear.")
def cmd_spectrum(
    image: Path, block: int, out_csv: Path | None, out_png: Path | None,
    log_scale: bool,
) -> None:
    """Write the block DCT energy grid of an image as CSV plus a heatmap."""

    def body() -> None:
        grid = block_dct_energy(luma(load_image(image)), block)
        csv_path = out_csv or image.with_suffix(image.suffix + ".spectrum.csv")
        png_path = out_png or image.with_suffix(image.suffix + ".spectrum.png")
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["u"] + [f"v{v}" for v in range(block)])
            for u in range(block):
                writer.writerow([u] + [f"{grid[u, v]:.10g}" for v in range(block)])
        figures.save_heatmap_png(grid, png_path, log_scale=log_scale,
                                 title=image.name)
        click.echo(f"wrote {csv_path}")
        click.echo(f"wrote {png_path}")

    _run(body)


# --- mask-hf ----------------------------------------------------------------------

def _keep_suffix(keep: float) -> str:
    return ("%g" % (keep * 100)).replace(".", "_")


@main.command("mask-hf")
@click.argument("image", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--keep", "keeps", type=float, multiple=True,
              default=(0.95, 0.90, 0.85, 0.80), show_default=True,
              help="Fraction(s) of each spectral range to retain; repeatable.")
@click.option("-o", "--out-dir", type=click.Path(file_okay=False, path_type=Path),
              default=Path("."), envvar="DUALALIGN_OUT_DIR",
              help="Directory for the masked outputs.")
def cmd_mask_hf(image: Path, keeps: tuple[float, ...], out_dir: Path) -> None:
    """Null high-frequency DCT content above the kept fraction(s).

    Each threshold K writes ``<stem>_keep<P>.png`` where P is 100*K
    (e.g. _keep95.png, _keep87_5.png).
    """

    def body() -> None:
        img = load_image(image)
        out_dir.mkdir(parents=True, exist_ok=True)
        for keep in keeps:
            masked = apply_hf_mask_image(img, keep)
            out = out_dir / f"{image.stem}_keep{_keep_suffix(keep)}.png"
            save_png(masked, out)
            click.echo(f"wrote {out}")

    _run(body)


# --- report -----------------------------------------------------------------------

@main.command("report")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--cutoff", type=float, default=0.5,
              help="Low/high split as a fraction of the Nyquist rate.")
@click.option("-o", "--out-dir", type=click.Path(file_okay=False, path_type=Path),
              default=Path("."), envvar="DUALALIGN_OUT_DIR",
              help="Directory for report.csv/json/png.")
@click.option("--figure/--no-figure", default=True,
              help="Render the summary bar chart alongside the tables.")
def cmd_report(manifest: Path, cutoff: float, out_dir: Path, figure: bool) -> None:
    """Measure a built dataset: per-pair metrics plus corpus aggregates."""

    def body() -> None:
        report = metrics.corpus_report(manifest, cutoff=cutoff)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "report.csv"
        json_path = out_dir / "report.json"
        metrics.write_report_csv(report, csv_path)
        metrics.write_report_json(report, json_path)
        if figure:
            png_path = out_dir / "report.png"
            figures.save_report_figure(report, png_path)
            click.echo(f"wrote {png_path}")
        click.echo(f"wrote {csv_path}")
        click.echo(f"wrote {json_path}")
        click.echo(
            f"pairs={report.n_pairs} skipped={report.n_skipped} "
            f"high_band_improved={report.fraction_high_band_improved:.3f}"
        )
        for label in sorted(report.per_variant):
            s = report.per_variant[label]
            click.echo(
                f"  {label}: mse={s.mse_mean:.4g} low={s.low_mean:.4g} "
                f"high={s.high_mean:.4g}"
            )

    _run(body)


# --- build -----------------------------------------------------------------------

@main.command("build")
@click.argument("real_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("recon_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("out_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--matching", default="stem",
              help='"stem" or the path of a real,recon CSV pair list.')
@click.option("--p-freq", type=float, default=AlignConfig.p_freq,
              help="Probability of the recompression stage.")
@click.option("--p-pixel", type=float, default=AlignConfig.p_pixel,
              help="Probability of the pixel-mixup stage.")
@click.option("--r-pixel-max", type=float, default=AlignConfig.r_pixel_max,
              help="Upper bound of the uniform mixup-ratio draw.")
@click.option("--fallback-qf", type=int, default=AlignConfig.fallback_qf,
              help="Quality used for non-JPEG reals in use_fallback_qf mode.")
@click.option("--freq-fallback-mode",
              type=click.Choice([FALLBACK_USE_QF, FALLBACK_SKIP]),
              default=AlignConfig.freq_fallback_mode,
              help="What the recompression stage does when the real is not JPEG.")
@click.option("--subsampling", type=click.Choice(["4:2:0", "4:2:2", "4:4:4"]),
              default=AlignConfig.subsampling, help="Chroma subsampling of the re-encode.")
@click.option("--emit-compressed/--no-emit-compressed",
              default=AlignConfig.emit_compressed_bytes,
              help="Persist exact encoder bytes (.jpg) when they equal the sample.")
@click.option("--seed", type=int, default=AlignConfig.seed, help="Global build seed.")
@click.option("--jobs", type=int, default=None,
              help="Parallel workers. [default: logical processors]")
@click.option("--copy-real/--reference-real", default=True,
              help="Copy real files into the dataset or reference them in place.")
def cmd_build(
    real_dir: Path,
    recon_dir: Path,
    out_dir: Path,
    matching: str,
    p_freq: float,
    p_pixel: float,
    r_pixel_max: float,
    fallback_qf: int,
    freq_fallback_mode: str,
    subsampling: str,
    emit_compressed: bool,
    seed: int,
    jobs: int | None,
    copy_real: bool,
) -> None:
    """Build an aligned dataset from stem-matched real/recon directories."""

    def body() -> None:
        pairing = dataset.pair_inputs(real_dir, recon_dir, matching)
        for path in pairing.unmatched_real:
            click.echo(f"unmatched real: {path}", err=True)
        for path in pairing.unmatched_recon:
            click.echo(f"unmatched recon: {path}", err=True)
        config = AlignConfig(
            r_pixel_max=r_pixel_max,
            p_pixel=p_pixel,
            p_freq=p_freq,
            fallback_qf=fallback_qf,
            freq_fallback_mode=freq_fallback_mode,
            subsampling=subsampling,
            emit_compressed_bytes=emit_compressed,
            seed=seed,
        )
        manifest_path = dataset.build_dataset(
            pairing.pairs, config, out_dir, jobs=jobs, copy_real=copy_real
        )
        manifest = dataset.load_manifest(manifest_path)
        n_ok = sum(
            1 for e in manifest["entries"]
            if e["label"] == dataset.LABEL_SYNTHETIC and e["status"] == "ok"
        )
        click.echo(f"wrote {manifest_path} ({n_ok}/{len(pairing.pairs)} pairs ok)")

    _run(body)


if __name__ == "__main__":
    main()
