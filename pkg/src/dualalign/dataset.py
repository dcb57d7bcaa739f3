"""Deterministic corpus builder and its audit manifest.

Pairs a directory of real images with same-stem reconstructions, aligns
every pair, and writes the results plus a manifest that fully determines
the build: version tag, global seed, config echo, and one entry per
written file with its SHA-256 content hash.

Reproducibility contract (pinned by MANIFEST_VERSION):
  * per-pair RNG seed = first 8 bytes (big-endian) of
    SHA-256(version || 0x00 || global_seed_be64 || 0x00 || pair_id_utf8),
    feeding numpy's PCG64;
  * content_hash = SHA-256 hex digest of the written file bytes;
  * entries are sorted by (pair_id, label) and the JSON has sorted keys.

Rebuilding with identical inputs, config, and seed reproduces every output
byte for byte; removing a pair never changes any other pair's bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .align import AlignConfig, align_pair
from .errors import (
    AmbiguousMatch,
    BuildFailed,
    DualAlignError,
    ManifestCorrupt,
    MissingFile,
    NoPairs,
)
from .raster import load_image, png_bytes

MANIFEST_VERSION = "dualalign-manifest-1"
MANIFEST_NAME = "manifest.json"
MANIFEST_CSV_NAME = "manifest.csv"

MANIFEST_CSV_COLUMNS = (
    "pair_id",
    "label",
    "real_path",
    "recon_path",
    "output_path",
    "status",
    "applied_freq",
    "applied_pixel",
    "qf_used",
    "r_pixel_used",
    "content_hash",
)

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff", ".webp"}

LABEL_REAL = "REAL"
LABEL_SYNTHETIC = "SYNTHETIC"


# --- pairing -------------------------------------------------------------------

@dataclass
class PairingResult:
    pairs: list[tuple[Path, Path]]
    unmatched_real: list[Path] = field(default_factory=list)
    unmatched_recon: list[Path] = field(default_factory=list)


def _image_files(directory: Path) -> list[Path]:
    return sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def _by_stem(files: list[Path], where: str) -> dict[str, Path]:
    out: dict[str, Path] = {}
    for p in files:
        if p.stem in out:
            raise AmbiguousMatch(f"duplicate stem {p.stem!r} in {where}")
        out[p.stem] = p
    return out


def pair_inputs(
    real_dir: str | Path,
    recon_dir: str | Path,
    matching: str = "stem",
) -> PairingResult:
    """Match real images to reconstructions.

    ``matching="stem"`` pairs files that share a filename stem, in
    lexicographic stem order. ``matching`` may instead be the path of a
    CSV file with ``real,recon`` columns (paths absolute or relative to
    the CSV). Unmatched files are reported, not dropped silently.
    """
    real_dir, recon_dir = Path(real_dir), Path(recon_dir)
    if matching == "stem":
        reals = _by_stem(_image_files(real_dir), str(real_dir))
        recons = _by_stem(_image_files(recon_dir), str(recon_dir))
        common = sorted(set(reals) & set(recons))
        result = PairingResult(
            pairs=[(reals[s], recons[s]) for s in common],
            unmatched_real=[reals[s] for s in sorted(set(reals) - set(recons))],
            unmatched_recon=[recons[s] for s in sorted(set(recons) - set(reals))],
        )
    else:
        import csv as _csv

        csv_path = Path(matching)
        if not csv_path.is_file():
            raise MissingFile(f"pair list {csv_path} not found")
        pairs: list[tuple[Path, Path]] = []
        with open(csv_path, newline="") as fh:
            for row in _csv.DictReader(fh):
                real = Path(row["real"])
                recon = Path(row["recon"])
                pairs.append(
                    (
                        real if real.is_absolute() else csv_path.parent / real,
                        recon if recon.is_absolute() else csv_path.parent / recon,
                    )
                )
        pairs.sort(key=lambda pr: pr[0].stem)
        seen: set[str] = set()
        for real, _ in pairs:
            if real.stem in seen:
                raise AmbiguousMatch(f"duplicate stem {real.stem!r} in pair list")
            seen.add(real.stem)
        result = PairingResult(pairs=pairs)
    if not result.pairs:
        raise NoPairs(f"no (real, recon) pairs between {real_dir} and {recon_dir}")
    return result


# --- seeding and hashing ---------------------------------------------------------

def derive_item_seed(global_seed: int, pair_id: str) -> int:
    """Stable 64-bit per-pair seed; see the module docstring for the scheme."""
    h = hashlib.sha256()
    h.update(MANIFEST_VERSION.encode("ascii"))
    h.update(b"\x00")
    h.update(int(global_seed).to_bytes(8, "big"))
    h.update(b"\x00")
    h.update(pair_id.encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")


def item_rng(global_seed: int, pair_id: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_item_seed(global_seed, pair_id)))


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# --- building ---------------------------------------------------------------------

def _build_one(
    real_path: Path,
    recon_path: Path,
    config: AlignConfig,
    out_dir: Path,
    global_seed: int,
    copy_real: bool,
) -> list[dict]:
    pair_id = real_path.stem
    real_bytes = real_path.read_bytes()
    recon = load_image(recon_path)
    sample = align_pair(
        real_bytes,
        recon,
        config,
        item_rng(global_seed, pair_id),
        source_real=str(real_path),
        source_recon=str(recon_path),
    )

    if sample.jpeg_bytes is not None:
        syn_rel = Path("syn") / f"{pair_id}.jpg"
        syn_data = sample.jpeg_bytes
    else:
        syn_rel = Path("syn") / f"{pair_id}.png"
        syn_data = png_bytes(sample.image)
    (out_dir / syn_rel).write_bytes(syn_data)

    if copy_real:
        real_rel = Path("real") / real_path.name
        (out_dir / real_rel).write_bytes(real_bytes)
        real_ref = str(real_rel)
    else:
        real_ref = str(real_path.resolve())

    common = {
        "pair_id": pair_id,
        "real_path": real_ref,
        "recon_path": str(recon_path.resolve()),
        "status": "ok",
    }
    real_entry = {
        **common,
        "label": LABEL_REAL,
        "output_path": real_ref,
        "applied_freq": None,
        "applied_pixel": None,
        "qf_used": None,
        "r_pixel_used": None,
        "content_hash": content_hash(real_bytes),
    }
    syn_entry = {
        **common,
        "label": LABEL_SYNTHETIC,
        "output_path": str(syn_rel),
        "applied_freq": sample.applied_freq,
        "applied_pixel": sample.applied_pixel,
        "qf_used": sample.qf_used,
        "r_pixel_used": sample.r_pixel_used,
        "content_hash": content_hash(syn_data),
    }
    return [real_entry, syn_entry]


def _error_entries(real_path: Path, recon_path: Path, exc: Exception) -> list[dict]:
    return [
        {
            "pair_id": real_path.stem,
            "label": label,
            "real_path": str(real_path),
            "recon_path": str(recon_path),
            "output_path": None,
            "status": f"error:{type(exc).__name__}: {exc}",
            "applied_freq": None,
            "applied_pixel": None,
            "qf_used": None,
            "r_pixel_used": None,
            "content_hash": None,
        }
        for label in (LABEL_REAL, LABEL_SYNTHETIC)
    ]


def build_dataset(
    pairs: list[tuple[Path, Path]],
    config: AlignConfig,
    out_dir: str | Path,
    jobs: int | None = None,
    copy_real: bool = True,
) -> Path:
    """Align every pair and write ``out_dir/{real,syn,manifest.json}``.

    One pair failing is recorded in its entry's status and does not stop
    the build; :class:`BuildFailed` is raised only when every pair fails.
    Returns the manifest path.
    """
    if not pairs:
        raise NoPairs("empty pair list")
    out_dir = Path(out_dir)
    (out_dir / "real").mkdir(parents=True, exist_ok=True)
    (out_dir / "syn").mkdir(parents=True, exist_ok=True)

    def task(pr: tuple[Path, Path]) -> list[dict]:
        real_path, recon_path = pr
        try:
            return _build_one(
                real_path, recon_path, config, out_dir, config.seed, copy_real
            )
        except (DualAlignError, OSError, ValueError) as exc:
            return _error_entries(real_path, recon_path, exc)

    workers = jobs or os.cpu_count() or 1
    if workers == 1:
        batches = [task(pr) for pr in pairs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(task, pairs))

    entries = [e for batch in batches for e in batch]
    entries.sort(key=lambda e: (e["pair_id"], e["label"]))
    if all(e["status"] != "ok" for e in entries):
        raise BuildFailed("all dataset entries failed")

    manifest = {
        "version": MANIFEST_VERSION,
        "global_seed": config.seed,
        "config": asdict(config),
        "entries": entries,
    }
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    write_manifest_csv(manifest, out_dir / MANIFEST_CSV_NAME)
    return manifest_path


def write_manifest_csv(manifest: dict, path: Path) -> None:
    """Flat CSV projection of the manifest entries (columns as documented)."""
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.DictWriter(fh, fieldnames=MANIFEST_CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for entry in manifest["entries"]:
            writer.writerow(
                {k: ("" if entry.get(k) is None else entry.get(k)) for k in MANIFEST_CSV_COLUMNS}
            )


# --- manifest access and verification ----------------------------------------------

def load_manifest(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest {path} not found")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestCorrupt(f"manifest is not valid JSON: {exc}") from exc
    for key in ("version", "global_seed", "config", "entries"):
        if key not in manifest:
            raise ManifestCorrupt(f"manifest missing key {key!r}")
    return manifest


def entries_by_pair(manifest: dict) -> dict[str, dict[str, dict]]:
    """Index entries as pair_id -> label -> entry; duplicates are corrupt."""
    out: dict[str, dict[str, dict]] = {}
    for entry in manifest["entries"]:
        pair_id, label = entry.get("pair_id"), entry.get("label")
        if pair_id is None or label not in (LABEL_REAL, LABEL_SYNTHETIC):
            raise ManifestCorrupt(f"bad entry: {entry!r}")
        slot = out.setdefault(pair_id, {})
        if label in slot:
            raise ManifestCorrupt(f"duplicate pair_id {pair_id!r} for label {label}")
        slot[label] = entry
    for pair_id, slot in out.items():
        if LABEL_SYNTHETIC in slot and LABEL_REAL not in slot:
            raise ManifestCorrupt(f"SYNTHETIC entry {pair_id!r} has no REAL sibling")
    return out


def read_image(path: Path) -> np.ndarray:
    if not path.is_file():
        raise MissingFile(f"{path} not found")
    return load_image(path)


@dataclass
class EntryVerdict:
    pair_id: str
    label: str
    ok: bool
    reason: str = ""


@dataclass
class VerificationReport:
    verdicts: list[EntryVerdict]

    @property
    def passed(self) -> bool:
        return all(v.ok for v in self.verdicts)

    @property
    def n_failed(self) -> int:
        return sum(not v.ok for v in self.verdicts)


def verify_manifest(manifest_path: str | Path) -> VerificationReport:
    """Re-hash every recorded file and re-check the manifest invariants."""
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    entries_by_pair(manifest)  # structural invariants
    root = manifest_path.resolve().parent

    verdicts: list[EntryVerdict] = []
    for entry in manifest["entries"]:
        pair_id, label = entry["pair_id"], entry["label"]
        if entry["status"] != "ok":
            verdicts.append(
                EntryVerdict(pair_id, label, True, f"recorded failure: {entry['status']}")
            )
            continue
        rel = entry["output_path"]
        target = Path(rel) if Path(rel).is_absolute() else root / rel
        if not target.is_file():
            verdicts.append(EntryVerdict(pair_id, label, False, f"missing file {rel}"))
            continue
        digest = hash_file(target)
        if digest != entry["content_hash"]:
            verdicts.append(EntryVerdict(pair_id, label, False, "content hash mismatch"))
        else:
            verdicts.append(EntryVerdict(pair_id, label, True))
    return VerificationReport(verdicts)
