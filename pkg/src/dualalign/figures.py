"""Matplotlib renderings of energy grids and corpus reports (file output only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import CorpusReport  # noqa: E402


def save_heatmap_png(
    grid: np.ndarray,
    path: str | Path,
    log_scale: bool = True,
    title: str | None = None,
) -> None:
    """Render an energy grid as a grayscale heatmap PNG.

    By default intensities are log(1 + energy), so lighter cells mean
    higher energy while low-amplitude structure stays visible; pass
    ``log_scale=False`` for a linear mapping.
    """
    data = np.log1p(np.asarray(grid, dtype=np.float64)) if log_scale else np.asarray(grid)
    fig, ax = plt.subplots(figsize=(4.2, 4.0))
    im = ax.imshow(data, cmap="gray", interpolation="nearest")
    ax.set_xlabel("horizontal frequency index")
    ax.set_ylabel("vertical frequency index")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04,
                 label="log(1 + energy)" if log_scale else "energy")
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def save_report_figure(report: CorpusReport, path: str | Path) -> None:
    """Render per-variant mean band errors and MSE as a two-panel bar chart."""
    labels = sorted(report.per_variant)
    stats = [report.per_variant[k] for k in labels]
    x = np.arange(len(labels))

    fig, (ax_band, ax_mse) = plt.subplots(1, 2, figsize=(9.0, 3.8))
    width = 0.38
    ax_band.bar(x - width / 2, [s.low_mean for s in stats], width, label="low band")
    ax_band.bar(x + width / 2, [s.high_mean for s in stats], width, label="high band")
    ax_band.set_xticks(x, labels)
    ax_band.set_ylabel("mean relative error (DFT magnitude)")
    ax_band.set_title(f"band errors vs real (cutoff {report.cutoff:g})")
    ax_band.legend()

    ax_mse.bar(x, [s.mse_mean for s in stats], width=0.5, color="tab:gray")
    ax_mse.set_xticks(x, labels)
    ax_mse.set_ylabel("mean MSE (8-bit scale)")
    ax_mse.set_title(f"pixel error over {report.n_pairs} pairs")

    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)
