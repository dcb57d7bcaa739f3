"""Dataset alignment toolkit.

Estimates the JPEG quality history of real images, matches reconstructed
counterparts to it (recompression plus pixel mixup), and measures how well
pairs line up in both the pixel and frequency domains.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .align import (
    AlignConfig,
    AlignedSample,
    align_pair,
    center_crop_multiple,
    frequency_align,
    perturb,
    perturb_blur,
    perturb_jpeg,
    perturb_resize,
    pixel_mixup,
    pixel_mixup_float,
    sample_mixup_ratio,
)
from .dataset import (
    build_dataset,
    derive_item_seed,
    item_rng,
    pair_inputs,
    verify_manifest,
)
from .jpeg import (
    QualityEstimate,
    QuantTables,
    decode_jpeg,
    encode_jpeg,
    estimate_quality,
    extract_quant_tables,
    is_jpeg,
    parse_jpeg_segments,
    scale_standard_tables,
)
from .metrics import CorpusReport, PairReport, corpus_report, mse, pair_report
from .spectral import (
    BandError,
    SpectrumMap,
    apply_hf_mask_image,
    band_relative_error,
    block_dct_energy,
    dct2,
    idct2,
    mask_high_freq,
)

__all__ = [
    "__version__",
    "AlignConfig",
    "AlignedSample",
    "BandError",
    "CorpusReport",
    "PairReport",
    "QualityEstimate",
    "QuantTables",
    "SpectrumMap",
    "align_pair",
    "apply_hf_mask_image",
    "band_relative_error",
    "block_dct_energy",
    "build_dataset",
    "center_crop_multiple",
    "corpus_report",
    "dct2",
    "decode_jpeg",
    "derive_item_seed",
    "encode_jpeg",
    "estimate_quality",
    "extract_quant_tables",
    "frequency_align",
    "idct2",
    "is_jpeg",
    "item_rng",
    "mask_high_freq",
    "mse",
    "pair_inputs",
    "pair_report",
    "parse_jpeg_segments",
    "perturb",
    "perturb_blur",
    "perturb_jpeg",
    "perturb_resize",
    "pixel_mixup",
    "pixel_mixup_float",
    "sample_mixup_ratio",
    "scale_standard_tables",
    "verify_manifest",
]
