"""
Raster types and bit-exact netpbm I/O.

Only the binary variants are handled: P5 (8-bit grayscale in, 16-bit
disparity out) and P6 (8-bit RGB, converted to luma on load). Header
comments (``#`` to end of line) are accepted anywhere whitespace is.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .matchers import DisparityMap

__all__ = [
    "GrayImage",
    "FrameTriple",
    "FrameRecord",
    "DatasetManifest",
    "PnmError",
    "PnmMagicError",
    "PnmHeaderError",
    "PnmMaxvalError",
    "PnmTruncatedError",
    "ManifestError",
    "load_pgm",
    "save_pgm",
    "load_ppm_as_gray",
    "encode_pgm",
    "load_manifest",
    "write_manifest",
    "write_disparity",
    "read_disparity",
]


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Rectified 8-bit intensity image, stored as a read-only ``(height, width)`` uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"GrayImage needs a 2-D grid, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"GrayImage dimensions must be positive, got {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("intensities must lie in [0, 255]")
            if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr)):
                raise ValueError("intensities must be integers")
            arr = arr.astype(np.uint8)
        else:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "GrayImage":
        values = np.asarray(values)
        if values.size != width * height:
            raise ValueError(f"expected {width * height} values, got {values.size}")
        return cls(values.reshape(height, width))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))


@dataclass(frozen=True)
class FrameTriple:
    """Reference, match and third views recorded at one time instant."""

    reference: GrayImage
    match: GrayImage
    third: GrayImage
    frame_index: int = 0
    baseline_fraction: float = 0.5

    def __post_init__(self):
        shapes = {self.reference.shape, self.match.shape, self.third.shape}
        if len(shapes) != 1:
            raise ValueError(f"frame images differ in size: {sorted(shapes)}")
        if self.frame_index < 0:
            raise ValueError("frame_index must be non-negative")
        _check_baseline(self.baseline_fraction)


@dataclass(frozen=True)
class FrameRecord:
    reference: Path
    match: Path
    third: Path


@dataclass(frozen=True)
class DatasetManifest:
    case_id: str
    frames: tuple[FrameRecord, ...]
    baseline_fraction: float
    source: Path | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.frames:
            raise ManifestError("manifest lists no frames")
        _check_baseline(self.baseline_fraction)
        for k, rec in enumerate(self.frames):
            if len({rec.reference, rec.match, rec.third}) != 3:
                raise ManifestError(f"frame {k}: reference, match and third paths must be distinct")

    @property
    def T(self) -> int:
        return len(self.frames)

    def load_frame(self, index: int, baseline_fraction: float | None = None) -> FrameTriple:
        rec = self.frames[index]
        alpha = self.baseline_fraction if baseline_fraction is None else baseline_fraction
        return FrameTriple(
            reference=load_image(rec.reference),
            match=load_image(rec.match),
            third=load_image(rec.third),
            frame_index=index,
            baseline_fraction=alpha,
        )


def _check_baseline(alpha):
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"baseline_fraction must lie in (0, 1], got {alpha}")


class PnmError(ValueError):
    """Malformed netpbm file. ``offset`` is the byte position where decoding failed."""

    def __init__(self, message: str, offset: int | None = None, path=None):
        self.offset = offset
        self.path = path
        where = f" at byte {offset}" if offset is not None else ""
        src = f"{path}: " if path is not None else ""
        super().__init__(f"{src}{message}{where}")


class PnmMagicError(PnmError):
    pass


class PnmHeaderError(PnmError):
    pass


class PnmMaxvalError(PnmError):
    pass


class PnmTruncatedError(PnmError):
    pass


class ManifestError(ValueError):
    pass


_WS = b" \t\n\r\v\f"


def _parse_header(buf: bytes, path=None):
    """Return (magic, width, height, maxval, maxval_offset, payload_offset, comments)."""
    if len(buf) < 2:
        raise PnmHeaderError("file too short for a netpbm magic number", 0, path)
    magic = buf[:2].decode("latin-1")
    pos = 2
    comments = []
    tokens = []
    while len(tokens) < 3:
        # skip whitespace and comments
        while pos < len(buf):
            c = buf[pos:pos + 1]
            if c[0] in _WS:
                pos += 1
            elif c == b"#":
                end = buf.find(b"\n", pos)
                end = len(buf) if end < 0 else end
                comments.append(buf[pos + 1:end].decode("latin-1").strip())
                pos = end
            else:
                break
        start = pos
        while pos < len(buf) and buf[pos] not in _WS and buf[pos:pos + 1] != b"#":
            pos += 1
        tok = buf[start:pos]
        if not tok:
            raise PnmHeaderError("unexpected end of header", start, path)
        if not tok.isdigit():
            raise PnmHeaderError(f"expected a decimal number, found {tok!r}", start, path)
        tokens.append((int(tok), start))
    if pos >= len(buf) or buf[pos] not in _WS:
        raise PnmHeaderError("missing whitespace after maxval", pos, path)
    (width, w_off), (height, h_off), (maxval, m_off) = tokens
    if width < 1:
        raise PnmHeaderError("width must be positive", w_off, path)
    if height < 1:
        raise PnmHeaderError("height must be positive", h_off, path)
    return magic, width, height, maxval, m_off, pos + 1, comments


def _decode(buf: bytes, expect_magic: str, expect_maxval: int, path=None):
    if len(buf) < 2:
        raise PnmHeaderError("file too short for a netpbm magic number", 0, path)
    if buf[:2].decode("latin-1", "replace") != expect_magic:
        found = buf[:2].decode("latin-1", "replace")
        raise PnmMagicError(
            f"wrong format for this loader: expected magic {expect_magic!r}, found {found!r}", 0, path
        )
    _, width, height, maxval, m_off, offset, comments = _parse_header(buf, path)
    if maxval != expect_maxval:
        raise PnmMaxvalError(f"maxval must be {expect_maxval}, found {maxval}", m_off, path)
    channels = 3 if expect_magic == "P6" else 1
    itemsize = 1 if maxval < 256 else 2
    need = width * height * channels * itemsize
    have = len(buf) - offset
    if have < need:
        raise PnmTruncatedError(
            f"pixel payload truncated: expected {need} bytes, found {have}", offset + have, path
        )
    dtype = np.uint8 if itemsize == 1 else np.dtype(">u2")
    arr = np.frombuffer(buf, dtype=dtype, count=width * height * channels, offset=offset)
    shape = (height, width, channels) if channels == 3 else (height, width)
    return arr.reshape(shape), comments


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def load_pgm(path) -> GrayImage:
    """Decode a binary 8-bit PGM (P5, maxval 255)."""
    arr, _ = _decode(_read_bytes(path), "P5", 255, path)
    return GrayImage(arr)


def load_ppm_as_gray(path) -> GrayImage:
    """Decode a binary PPM (P6, maxval 255) and convert it to BT.601 luma.

    Luma is ``round(0.299 R + 0.587 G + 0.114 B)`` evaluated in exact integer
    arithmetic (per-mille weights), halves rounded up.
    """
    rgb, _ = _decode(_read_bytes(path), "P6", 255, path)
    rgb = rgb.astype(np.int64)
    luma = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return GrayImage(np.clip(luma, 0, 255).astype(np.uint8))


def load_image(path) -> GrayImage:
    """Load a P5 or P6 file, dispatching on its magic number."""
    buf = _read_bytes(path)
    if buf[:2] == b"P6":
        return load_ppm_as_gray(path)
    arr, _ = _decode(buf, "P5", 255, path)
    return GrayImage(arr)


def encode_pgm(data: np.ndarray, maxval: int = 255, comments=()) -> bytes:
    data = np.asarray(data)
    height, width = data.shape
    head = [b"P5"]
    head += [b"# " + c.encode("latin-1") for c in comments]
    head.append(f"{width} {height}".encode())
    head.append(f"{maxval}".encode())
    if maxval < 256:
        payload = data.astype(np.uint8).tobytes()
    else:
        payload = data.astype(">u2").tobytes()
    return b"\n".join(head) + b"\n" + payload


def _write_atomic(path, blob: bytes):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def save_pgm(image: GrayImage, path) -> None:
    _write_atomic(path, encode_pgm(image.data))


# -- disparity persistence ---------------------------------------------------

DISPARITY_SCALE = 256


def write_disparity(dmap: "DisparityMap", path) -> None:
    """Store a disparity map as a 16-bit PGM holding ``d * 256``.

    Stored value 0 is reserved for invalid pixels. A valid disparity of 0 is
    stored as 1, which still decodes to 0 under ``value >> 8`` but stays
    distinguishable from the invalid marker. The disparity range is kept in
    a header comment so that :func:`read_disparity` restores the map exactly.
    """
    d = dmap.data.astype(np.int64)
    valid = dmap.valid
    if valid.any() and d[valid].max() * DISPARITY_SCALE > 65535:
        raise ValueError("disparity too large for 16-bit fixed-point storage")
    stored = np.where(valid, np.maximum(d * DISPARITY_SCALE, 1), 0)
    comment = f"disparity-range {dmap.min_d} {dmap.max_d}"
    _write_atomic(path, encode_pgm(stored, maxval=65535, comments=[comment]))


def read_disparity(path) -> "DisparityMap":
    from .matchers import INVALID, DisparityMap

    arr, comments = _decode(_read_bytes(path), "P5", 65535, path)
    stored = arr.astype(np.int64)
    data = np.where(stored == 0, INVALID, stored >> 8).astype(np.int32)
    min_d = max_d = None
    for c in comments:
        parts = c.split()
        if len(parts) == 3 and parts[0] == "disparity-range":
            min_d, max_d = int(parts[1]), int(parts[2])
    if min_d is None:
        valid = data != INVALID
        min_d = int(data[valid].min()) if valid.any() else 0
        max_d = int(data[valid].max()) if valid.any() else 0
    return DisparityMap(data, min_d, max_d)


# -- manifest ----------------------------------------------------------------

def load_manifest(path) -> DatasetManifest:
    """Parse a plain-text dataset manifest.

    Grammar, one directive per line::

        case <identifier>
        baseline <decimal in (0, 1]>
        frame <reference> <match> <third>

    ``case`` and ``baseline`` appear exactly once. ``#`` starts a comment.
    Image paths are resolved against the manifest's directory.
    """
    path = Path(path)
    root = path.resolve().parent
    case_id = None
    baseline = None
    frames = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        where = f"{path}:{lineno}"
        if key == "case":
            if case_id is not None:
                raise ManifestError(f"{where}: duplicate 'case' directive")
            if len(args) != 1:
                raise ManifestError(f"{where}: 'case' takes exactly one identifier")
            case_id = args[0]
        elif key == "baseline":
            if baseline is not None:
                raise ManifestError(f"{where}: duplicate 'baseline' directive")
            if len(args) != 1:
                raise ManifestError(f"{where}: 'baseline' takes exactly one value")
            try:
                baseline = float(args[0])
            except ValueError:
                raise ManifestError(f"{where}: baseline {args[0]!r} is not a decimal") from None
            if not (0.0 < baseline <= 1.0):
                raise ManifestError(f"{where}: baseline {baseline} out of range (0, 1]")
        elif key == "frame":
            if len(args) != 3:
                raise ManifestError(f"{where}: 'frame' needs reference, match and third paths")
            paths = []
            for p in args:
                full = (root / p).resolve() if not Path(p).is_absolute() else Path(p)
                if not full.is_file():
                    raise ManifestError(f"{where}: image not found: {p}")
                paths.append(full)
            if len(set(paths)) != 3:
                raise ManifestError(f"{where}: frame paths must be distinct")
            frames.append(FrameRecord(*paths))
        else:
            raise ManifestError(f"{where}: unknown directive {key!r}")
    if case_id is None:
        raise ManifestError(f"{path}: missing 'case' directive")
    if baseline is None:
        raise ManifestError(f"{path}: missing 'baseline' directive")
    if not frames:
        raise ManifestError(f"{path}: manifest lists no frames")
    return DatasetManifest(case_id, tuple(frames), baseline, source=path)


def write_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    root = path.resolve().parent
    out = [f"case {manifest.case_id}", f"baseline {manifest.baseline_fraction!r}"]
    for rec in manifest.frames:
        rel = [os.path.relpath(Path(p).resolve(), root) for p in (rec.reference, rec.match, rec.third)]
        if any(any(ch.isspace() for ch in r) for r in rel):
            raise ManifestError("manifest paths may not contain whitespace")
        out.append("frame " + " ".join(Path(r).as_posix() for r in rel))
    _write_atomic(path, ("\n".join(out) + "\n").encode("utf-8"))
