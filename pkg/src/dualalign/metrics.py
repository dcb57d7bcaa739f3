"""Per-pair and corpus-level alignment measurement.

A pair report compares one or more labeled variants of a synthetic image
against its real source: pixel MSE on the 8-bit scale, low/high DFT band
relative errors on the luma plane, and the block DCT energy grids of both
sides. A corpus report streams every pair of a built dataset manifest,
aggregates the same quantities per variant, and records how often the
alignment stage actually reduced the high-band error.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import __version__ as _toolkit_version
from . import dataset as dataset_mod
from . import jpeg
from .errors import MalformedStream, MissingFile, ShapeMismatch
from .raster import luma, to_float
from .spectral import band_relative_error, block_dct_energy

CSV_COLUMNS = (
    "pair_id",
    "variant",
    "mse",
    "low_rel_err",
    "high_rel_err",
    "qf_estimate",
    "qf_exact",
)

VARIANT_RECON = "recon"
VARIANT_ALIGNED = "aligned"


def mse(a: np.ndarray, b: np.ndarray, normalized: bool = False) -> float:
    """Mean squared per-channel difference in 8-bit units.

    ``normalized=True`` rescales to the [0, 1] pixel convention
    (divides by 255^2).
    """
    x, y = to_float(a), to_float(b)
    if x.shape != y.shape:
        raise ShapeMismatch(f"{x.shape} vs {y.shape}")
    value = float(np.mean((x - y) ** 2))
    return value / 255.0**2 if normalized else value


@dataclass
class PairReport:
    """Alignment metrics of one labeled variant against its real source."""

    pair_id: str
    variant: str
    mse: float
    low_rel_err: float
    high_rel_err: float
    hf_grid_real: np.ndarray
    hf_grid_syn: np.ndarray
    qf_estimate: jpeg.QualityEstimate | None = None

    def csv_row(self) -> dict[str, str]:
        est = self.qf_estimate
        return {
            "pair_id": self.pair_id,
            "variant": self.variant,
            "mse": f"{self.mse:.10g}",
            "low_rel_err": f"{self.low_rel_err:.10g}",
            "high_rel_err": f"{self.high_rel_err:.10g}",
            "qf_estimate": "" if est is None else str(est.quality),
            "qf_exact": "" if est is None else str(est.exact).lower(),
        }


def pair_report(
    real: np.ndarray,
    variants: Mapping[str, np.ndarray],
    cutoff: float = 0.5,
    pair_id: str = "",
    block: int = 8,
    qf_estimate: jpeg.QualityEstimate | None = None,
) -> list[PairReport]:
    """Compute metrics for each labeled variant of one pair.

    An empty variant mapping yields an empty list. All variants must match
    the real image's shape.
    """
    reports: list[PairReport] = []
    if not variants:
        return reports
    real_arr = np.asarray(real)
    real_luma = luma(real_arr)
    grid_real = block_dct_energy(real_luma, block)
    for label in variants:
        syn = np.asarray(variants[label])
        if syn.shape != real_arr.shape:
            raise ShapeMismatch(f"variant {label!r}: {syn.shape} vs {real_arr.shape}")
        syn_luma = luma(syn)
        band = band_relative_error(real_luma, syn_luma, cutoff)
        reports.append(
            PairReport(
                pair_id=pair_id,
                variant=label,
                mse=mse(real_arr, syn),
                low_rel_err=band.low_rel_err,
                high_rel_err=band.high_rel_err,
                hf_grid_real=grid_real,
                hf_grid_syn=block_dct_energy(syn_luma, block),
                qf_estimate=qf_estimate,
            )
        )
    return reports


@dataclass
class VariantStats:
    """Mean/median/std aggregates of one variant over the corpus."""

    n: int
    mse_mean: float
    mse_median: float
    mse_std: float
    low_mean: float
    low_median: float
    low_std: float
    high_mean: float
    high_median: float
    high_std: float

    @classmethod
    def from_rows(cls, rows: list[PairReport]) -> "VariantStats":
        def agg(values: list[float]) -> tuple[float, float, float]:
            return (
                statistics.fmean(values),
                statistics.median(values),
                statistics.pstdev(values) if len(values) > 1 else 0.0,
            )

        m = agg([r.mse for r in rows])
        lo = agg([r.low_rel_err for r in rows])
        hi = agg([r.high_rel_err for r in rows])
        return cls(len(rows), *m, *lo, *hi)


@dataclass
class CorpusReport:
    """Aggregated alignment metrics over a built dataset."""

    n_pairs: int
    n_skipped: int
    cutoff: float
    global_seed: int | None
    per_variant: dict[str, VariantStats]
    fraction_high_band_improved: float
    rows: list[PairReport] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "toolkit_version": _toolkit_version,
            "cutoff": self.cutoff,
            "seed": self.global_seed,
            "n_pairs": self.n_pairs,
            "n_skipped": self.n_skipped,
            "fraction_high_band_improved": self.fraction_high_band_improved,
            "per_variant": {
                label: vars(stats) for label, stats in sorted(self.per_variant.items())
            },
            "pairs": [r.csv_row() for r in self.rows],
            "skipped": [{"pair_id": p, "reason": r} for p, r in self.skipped],
        }


def corpus_report(manifest_path: str | Path, cutoff: float = 0.5) -> CorpusReport:
    """Measure every pair of a built dataset against its real source.

    Two variants are evaluated per pair: the raw reconstruction
    (``recon``) and the written aligned output (``aligned``). Entries
    whose files are missing or unreadable are skipped and counted, never
    fatal. Aggregation order is fixed by pair_id, so shuffled manifests
    produce identical reports.
    """
    manifest = dataset_mod.load_manifest(manifest_path)
    root = Path(manifest_path).resolve().parent
    by_pair = dataset_mod.entries_by_pair(manifest)

    rows: list[PairReport] = []
    skipped: list[tuple[str, str]] = []
    improved = 0
    compared = 0
    for pair_id in sorted(by_pair):
        entry = by_pair[pair_id].get("SYNTHETIC")
        if entry is None or entry.get("status") != "ok":
            skipped.append((pair_id, "entry not built"))
            continue
        try:
            real_bytes = (root / entry["real_path"]).read_bytes()
            recon_img = dataset_mod.read_image(root / entry["recon_path"])
            aligned_img = dataset_mod.read_image(root / entry["output_path"])
        except (OSError, ValueError, MissingFile, MalformedStream) as exc:
            skipped.append((pair_id, str(exc)))
            continue
        from .align import center_crop_multiple  # local import avoids a cycle
        from .raster import decode_image_bytes

        real_img = center_crop_multiple(decode_image_bytes(real_bytes), 8)
        qf_est = (
            jpeg.estimate_quality(jpeg.extract_quant_tables(real_bytes))
            if jpeg.is_jpeg(real_bytes)
            else None
        )
        pair_rows = pair_report(
            real_img,
            {VARIANT_RECON: recon_img, VARIANT_ALIGNED: aligned_img},
            cutoff=cutoff,
            pair_id=pair_id,
            qf_estimate=qf_est,
        )
        rows.extend(pair_rows)
        by_variant = {r.variant: r for r in pair_rows}
        if by_variant[VARIANT_ALIGNED].high_rel_err < by_variant[VARIANT_RECON].high_rel_err:
            improved += 1
        compared += 1

    per_variant: dict[str, list[PairReport]] = {}
    for r in rows:
        per_variant.setdefault(r.variant, []).append(r)
    return CorpusReport(
        n_pairs=compared,
        n_skipped=len(skipped),
        cutoff=cutoff,
        global_seed=manifest.get("global_seed"),
        per_variant={k: VariantStats.from_rows(v) for k, v in per_variant.items()},
        fraction_high_band_improved=(improved / compared) if compared else 0.0,
        rows=rows,
        skipped=skipped,
    )


def write_report_csv(report: CorpusReport, path: str | Path) -> None:
    """Write the per-pair rows as headered CSV (columns in CSV_COLUMNS)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in report.rows:
            writer.writerow(row.csv_row())


def write_report_json(report: CorpusReport, path: str | Path) -> None:
    """Write the report (rows plus config echo) as JSON."""
    Path(path).write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")
