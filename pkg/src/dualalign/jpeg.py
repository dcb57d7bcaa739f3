"""Baseline JPEG stream inspection, quality-factor estimation, and coding.

The segment walker, DQT extraction, and quality estimation are implemented
directly on the byte stream (markers big-endian per ITU-T T.81). Actual
entropy coding is delegated to Pillow/libjpeg, whose encoder follows the
same IJG table-scaling rule implemented in :func:`scale_standard_tables`;
the test suite enforces that the two agree byte for byte.

Quantization tables are carried in zigzag order exactly as they appear in
the DQT payload. Use :meth:`QuantTables.luma_natural` /
:meth:`QuantTables.chroma_natural` for the de-zigzagged (row-major) view.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import MalformedStream, MissingTables, OutOfRange, TooSmall, UnsupportedMode
from .raster import to_uint8

# --- markers ----------------------------------------------------------------

SOI = 0xFFD8
EOI = 0xFFD9
SOS = 0xFFDA
DQT = 0xFFDB
TEM = 0xFF01

# SOF markers by coding process. 0xFFC4 (DHT), 0xFFC8 (JPG), 0xFFCC (DAC)
# live in the same numeric range but are not frame headers.
_SOF_MARKERS = {0xFFC0 + n for n in range(16)} - {0xFFC4, 0xFFC8, 0xFFCC}
_BASELINE_SOF = {0xFFC0, 0xFFC1}
_ARITHMETIC_SOF = {0xFFC9, 0xFFCA, 0xFFCB, 0xFFCD, 0xFFCE, 0xFFCF}
# Standalone markers that carry no length field.
_BARE_MARKERS = {SOI, EOI, TEM} | {0xFFD0 + n for n in range(8)}

# Zigzag scan: position i of the wire order -> index into the natural
# (row-major) 8x8 layout. Identical to the T.81 Figure A.6 scan.
ZIGZAG_ORDER = (
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
)

# T.81 Annex K.1 reference tables, natural (row-major) order.
STANDARD_LUMA = (
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
)
STANDARD_CHROMA = (
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
)

_PIL_SUBSAMPLING = {"4:4:4": 0, "4:2:2": 1, "4:2:0": 2}


def zigzag(natural: tuple[int, ...] | list[int]) -> tuple[int, ...]:
    """Reorder a natural (row-major) 64-entry table into zigzag wire order."""
    return tuple(natural[ZIGZAG_ORDER[i]] for i in range(64))


def dezigzag(wire: tuple[int, ...] | list[int]) -> tuple[int, ...]:
    """Reorder a zigzag wire-order 64-entry table into natural order."""
    out = [0] * 64
    for i, v in enumerate(wire):
        out[ZIGZAG_ORDER[i]] = v
    return tuple(out)


# --- domain types -----------------------------------------------------------

@dataclass(frozen=True)
class QuantTables:
    """Quantization tables of a stream, entries in zigzag order."""

    luma: tuple[int, ...]
    chroma: tuple[int, ...] | None = None
    luma_precision: int = 8
    chroma_precision: int | None = None

    def __post_init__(self) -> None:
        self._check(self.luma, self.luma_precision, "luma")
        if self.chroma is not None:
            self._check(self.chroma, self.chroma_precision or 8, "chroma")

    @staticmethod
    def _check(entries: tuple[int, ...], precision: int, name: str) -> None:
        if len(entries) != 64:
            raise ValueError(f"{name} table must have 64 entries, got {len(entries)}")
        limit = 255 if precision == 8 else 65535
        for v in entries:
            if not 1 <= v <= limit:
                raise ValueError(f"{name} entry {v} outside [1, {limit}]")

    def luma_natural(self) -> tuple[int, ...]:
        return dezigzag(self.luma)

    def chroma_natural(self) -> tuple[int, ...] | None:
        return dezigzag(self.chroma) if self.chroma is not None else None


@dataclass(frozen=True)
class QualityEstimate:
    """Best-matching IJG quality factor for a set of observed tables."""

    quality: int
    distance: int
    exact: bool


@dataclass(frozen=True)
class Segment:
    """One marker segment: 2-byte marker code, byte offset, payload length.

    ``length`` is the payload byte count excluding the marker and the
    two length bytes; bare markers (SOI, EOI, RSTn, TEM) have length 0.
    """

    marker: int
    offset: int
    length: int


@dataclass(frozen=True)
class JpegSegmentList:
    """All marker segments up to and including SOS, plus SOF geometry."""

    segments: tuple[Segment, ...]
    height: int | None = None
    width: int | None = None
    components: int | None = None
    sof_marker: int | None = None


# --- stream parsing ----------------------------------------------------------

def parse_jpeg_segments(data: bytes) -> JpegSegmentList:
    """Walk the marker segments of a JPEG stream up to SOS.

    Entropy-coded data is never touched. Raises :class:`MalformedStream`
    on truncation, bad framing, or a length field that overruns the
    buffer; never reads past ``len(data)``.
    """
    n = len(data)
    if n < 2 or data[0] != 0xFF or data[1] != 0xD8:
        raise MalformedStream("stream does not start with SOI")
    segments = [Segment(SOI, 0, 0)]
    height = width = components = sof_marker = None

    pos = 2
    while True:
        if pos >= n:
            raise MalformedStream("stream ended before SOS")
        if data[pos] != 0xFF:
            raise MalformedStream(f"expected marker at offset {pos}")
        start = pos
        # Arbitrary fill bytes (0xFF) may pad the space before a marker.
        while pos < n and data[pos] == 0xFF:
            pos += 1
        if pos >= n:
            raise MalformedStream("stream ended inside marker")
        code = 0xFF00 | data[pos]
        pos += 1
        if code == 0xFF00:
            raise MalformedStream(f"invalid marker 0xFF00 at offset {start}")

        if code in _BARE_MARKERS:
            segments.append(Segment(code, start, 0))
            if code == EOI:
                raise MalformedStream("EOI before SOS")
            continue

        if pos + 2 > n:
            raise MalformedStream("truncated segment length")
        (seg_len,) = struct.unpack_from(">H", data, pos)
        if seg_len < 2:
            raise MalformedStream(f"segment length {seg_len} below minimum")
        payload_len = seg_len - 2
        payload_start = pos + 2
        if payload_start + payload_len > n:
            raise MalformedStream("segment length exceeds remaining bytes")
        segments.append(Segment(code, start, payload_len))

        if code in _SOF_MARKERS and sof_marker is None:
            if payload_len < 6:
                raise MalformedStream("SOF payload too short")
            _, height, width, components = struct.unpack_from(
                ">BHHB", data, payload_start
            )
            if payload_len < 6 + 3 * components:
                raise MalformedStream("SOF component list truncated")
            sof_marker = code

        pos = payload_start + payload_len
        if code == SOS:
            return JpegSegmentList(
                tuple(segments), height, width, components, sof_marker
            )


def is_jpeg(data: bytes) -> bool:
    """True iff the bytes start with SOI and carry a well-formed SOF."""
    try:
        return parse_jpeg_segments(data).sof_marker is not None
    except MalformedStream:
        return False


def extract_quant_tables(data: bytes) -> QuantTables:
    """Pull the quantization tables out of a JPEG stream.

    All DQT segments before SOS are read; when a segment redefines a
    table id, the last definition wins. Table id 0 maps to luma and id 1
    to chroma (ids 2-3 are legal but unused by baseline encoders and are
    ignored here).
    """
    parsed = parse_jpeg_segments(data)
    tables: dict[int, tuple[tuple[int, ...], int]] = {}
    for seg in parsed.segments:
        if seg.marker != DQT:
            continue
        payload = data[seg.offset + 4 : seg.offset + 4 + seg.length]
        off = 0
        while off < len(payload):
            pq_tq = payload[off]
            off += 1
            precision = 16 if (pq_tq >> 4) == 1 else 8
            if (pq_tq >> 4) > 1:
                raise MalformedStream(f"invalid DQT precision nibble {pq_tq >> 4}")
            table_id = pq_tq & 0x0F
            if table_id > 3:
                raise MalformedStream(f"invalid DQT table id {table_id}")
            width = 1 if precision == 8 else 2
            if off + 64 * width > len(payload):
                raise MalformedStream("truncated quantization table")
            if precision == 8:
                entries = tuple(payload[off : off + 64])
            else:
                entries = struct.unpack_from(">64H", payload, off)
            off += 64 * width
            if any(v == 0 for v in entries):
                raise MalformedStream("zero quantization entry")
            tables[table_id] = (entries, precision)
    if not tables:
        raise MissingTables("no DQT segment before SOS")
    if 0 not in tables:
        raise MissingTables("no luma (id 0) quantization table")
    luma, luma_prec = tables[0]
    chroma, chroma_prec = tables.get(1, (None, None))
    return QuantTables(luma, chroma, luma_prec, chroma_prec)


# --- IJG quality scaling and estimation --------------------------------------

def _scale_table(natural: tuple[int, ...], quality: int) -> tuple[int, ...]:
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality
    return tuple(min(max((b * scale + 50) // 100, 1), 255) for b in natural)


def scale_standard_tables(quality: int) -> QuantTables:
    """Annex-K tables scaled by the IJG rule, baseline-clamped to [1, 255].

    ``scale = 5000/q`` for q < 50, else ``200 - 2q``;
    ``entry = clamp(floor((base * scale + 50) / 100), 1, 255)``.
    """
    if not isinstance(quality, (int, np.integer)) or not 1 <= quality <= 100:
        raise OutOfRange(f"quality {quality!r} outside [1, 100]")
    quality = int(quality)
    return QuantTables(
        luma=zigzag(_scale_table(STANDARD_LUMA, quality)),
        chroma=zigzag(_scale_table(STANDARD_CHROMA, quality)),
        luma_precision=8,
        chroma_precision=8,
    )


def estimate_quality(tables: QuantTables) -> QualityEstimate:
    """Nearest IJG quality factor under L1 distance over the present tables.

    Scans q = 1..100 against :func:`scale_standard_tables`; ties are broken
    toward the highest q. ``exact`` means the observed tables are a perfect
    IJG scaling, i.e. distance 0.
    """
    best_q = 100
    best_dist: int | None = None
    for q in range(100, 0, -1):
        ref = scale_standard_tables(q)
        dist = sum(abs(a - b) for a, b in zip(tables.luma, ref.luma))
        if tables.chroma is not None:
            dist += sum(abs(a - b) for a, b in zip(tables.chroma, ref.chroma))
        if best_dist is None or dist < best_dist:
            best_q, best_dist = q, dist
            if dist == 0:
                break
    return QualityEstimate(best_q, best_dist, best_dist == 0)


# --- coding (Pillow/libjpeg backed) ------------------------------------------

def encode_jpeg(
    image: np.ndarray, quality: int, subsampling: str = "4:2:0"
) -> bytes:
    """Encode a raster as baseline sequential JPEG at an IJG quality factor.

    The emitted quantization tables are byte-identical to
    ``scale_standard_tables(quality)``. Accepts (H, W, 3) RGB or (H, W)
    grayscale rasters, minimum 8x8.
    """
    if not isinstance(quality, (int, np.integer)) or not 1 <= quality <= 100:
        raise OutOfRange(f"quality {quality!r} outside [1, 100]")
    if subsampling not in _PIL_SUBSAMPLING:
        raise OutOfRange(f"subsampling {subsampling!r} not one of {sorted(_PIL_SUBSAMPLING)}")
    arr = np.asarray(image)
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
        raise ValueError(f"expected HxW or HxWx3 raster, got shape {arr.shape}")
    if arr.shape[0] < 8 or arr.shape[1] < 8:
        raise TooSmall(f"image {arr.shape[0]}x{arr.shape[1]} below 8x8")
    if arr.dtype != np.uint8:
        arr = to_uint8(arr)
    buf = io.BytesIO()
    Image.fromarray(arr).save(
        buf,
        format="JPEG",
        quality=int(quality),
        subsampling=_PIL_SUBSAMPLING[subsampling],
    )
    return buf.getvalue()


def decode_jpeg(data: bytes) -> np.ndarray:
    """Decode a JPEG stream to an (H, W, 3) uint8 RGB raster.

    The platform codec also decodes progressive Huffman streams;
    arithmetic-coded streams raise :class:`UnsupportedMode`.
    """
    parsed = parse_jpeg_segments(data)  # raises MalformedStream when invalid
    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        if parsed.sof_marker in _ARITHMETIC_SOF or (
            parsed.sof_marker is not None and parsed.sof_marker not in _BASELINE_SOF
        ):
            raise UnsupportedMode(
                f"codec cannot decode SOF marker 0x{parsed.sof_marker:04X}"
            ) from exc
        raise MalformedStream(f"decode failed: {exc}") from exc
