"""Exception hierarchy shared by all toolkit modules.

Every error raised on a documented failure path derives from
:class:`DualAlignError`, so callers (and the CLI) can distinguish
structured failures from genuine bugs.
"""

from __future__ import annotations


class DualAlignError(Exception):
    """Base class for all structured toolkit errors."""


# --- byte-stream / codec errors -------------------------------------------

class MalformedStream(DualAlignError):
    """JPEG stream is truncated, mis-framed, or otherwise invalid."""


class MissingTables(DualAlignError):
    """No quantization tables were defined before the scan started."""


class UnsupportedMode(DualAlignError):
    """The stream uses a coding mode the decoder does not handle."""


# --- argument validation ----------------------------------------------------

class OutOfRange(DualAlignError):
    """A numeric argument fell outside its documented domain."""


class TooSmall(DualAlignError):
    """Image dimensions are below the operation's minimum."""


class ShapeMismatch(DualAlignError):
    """Two rasters that must share a shape do not."""


class NonFinite(DualAlignError):
    """Input samples contain NaN or infinity."""


class WrongKind(DualAlignError):
    """A spectrum of the wrong transform kind was supplied."""


class EmptyBand(DualAlignError):
    """A frequency band contains no bins at the requested cutoff."""


# --- dataset / manifest errors ---------------------------------------------

class NoPairs(DualAlignError):
    """Input pairing produced no (real, recon) pairs."""


class AmbiguousMatch(DualAlignError):
    """Two candidate files share the same matching stem."""


class MissingFile(DualAlignError):
    """A path recorded in a manifest does not resolve to a file."""


class ManifestCorrupt(DualAlignError):
    """A manifest violates its structural invariants."""


class BuildFailed(DualAlignError):
    """Every entry of a dataset build failed."""
