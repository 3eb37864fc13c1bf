"""
Windowed similarity measures and cost-volume construction.

Conventions used throughout:

* a disparity ``d >= 0`` pairs reference pixel ``(x, y)`` with match pixel
  ``(x + d, y)``; rows are fixed because inputs are rectified;
* every volume stores *costs* (lower is better). NCC similarity ``s`` is
  stored as ``1 - s``;
* entries whose window leaves either image are flagged invalid instead of
  being padded.

The per-pixel ``*_window`` functions are the definitions. :func:`build_cost_volume`
computes the same numbers with summed-area tables and must agree with the
definitions exactly for the integer measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .imgio import GrayImage

__all__ = [
    "Measure",
    "MatchWindow",
    "DisparityRange",
    "CensusImage",
    "CostVolume",
    "InvalidSampleError",
    "sad_window",
    "ssd_window",
    "ncc_window",
    "census_transform",
    "shd_window",
    "build_cost_volume",
    "box_sum",
]

MAX_WINDOW_RADIUS = 15


class Measure(str, Enum):
    SAD = "sad"
    SSD = "ssd"
    SHD = "shd"
    NCC = "ncc"

    @property
    def is_integer(self) -> bool:
        return self is not Measure.NCC


@dataclass(frozen=True)
class MatchWindow:
    """Square window of ``(2 * radius + 1)**2`` offsets centred on a pixel."""

    radius: int = 4

    def __post_init__(self):
        if not isinstance(self.radius, (int, np.integer)) or self.radius < 0:
            raise ValueError(f"window radius must be a non-negative integer, got {self.radius!r}")
        # 31**2 * 255**2 < 2**31 keeps SSD sums inside int32
        if self.radius > MAX_WINDOW_RADIUS:
            raise ValueError(f"window radius {self.radius} exceeds {MAX_WINDOW_RADIUS}")

    @property
    def size(self) -> int:
        return 2 * self.radius + 1

    @property
    def pixel_count(self) -> int:
        return self.size * self.size


@dataclass(frozen=True)
class DisparityRange:
    min_d: int = 0
    max_d: int = 15

    def __post_init__(self):
        if self.min_d < 0 or self.max_d < 0:
            raise ValueError("disparities must be non-negative")
        if self.min_d > self.max_d:
            raise ValueError(f"min_d {self.min_d} exceeds max_d {self.max_d}")

    @property
    def count(self) -> int:
        return self.max_d - self.min_d + 1

    def __iter__(self):
        return iter(range(self.min_d, self.max_d + 1))

    def __contains__(self, d) -> bool:
        return self.min_d <= d <= self.max_d

    def check_width(self, width: int) -> None:
        if self.max_d >= width:
            raise ValueError(f"max_d {self.max_d} must be smaller than image width {width}")


def _window(w) -> MatchWindow:
    return w if isinstance(w, MatchWindow) else MatchWindow(int(w))


def _pixels(img) -> np.ndarray:
    return img.data if isinstance(img, GrayImage) else np.asarray(img)


class InvalidSampleError(IndexError):
    """A window touches pixels outside the image (or outside a census image's valid area)."""


def _check_window(shape, x, y, d, r):
    h, w = shape[:2]
    if not (r <= y <= h - 1 - r and r <= x <= w - 1 - r and r <= x + d <= w - 1 - r):
        raise InvalidSampleError(
            f"window of radius {r} at (x={x}, y={y}) with d={d} leaves a {w}x{h} image"
        )


def _window_pair(I1, I2, x, y, d, w):
    a, b = _pixels(I1), _pixels(I2)
    if a.shape != b.shape:
        raise ValueError(f"image sizes differ: {a.shape} vs {b.shape}")
    r = _window(w).radius
    _check_window(a.shape, x, y, d, r)
    wa = a[y - r:y + r + 1, x - r:x + r + 1].astype(np.int64)
    wb = b[y - r:y + r + 1, x + d - r:x + d + r + 1].astype(np.int64)
    return wa, wb


def sad_window(I1, I2, x: int, y: int, d: int, w=MatchWindow()) -> int:
    """Sum of absolute differences between the window at ``(x, y)`` in I1 and at ``(x + d, y)`` in I2."""
    wa, wb = _window_pair(I1, I2, x, y, d, w)
    return int(np.abs(wa - wb).sum())


def ssd_window(I1, I2, x: int, y: int, d: int, w=MatchWindow()) -> int:
    wa, wb = _window_pair(I1, I2, x, y, d, w)
    return int(((wa - wb) ** 2).sum())


def _ncc_from_sums(cross: int, e1: int, e2: int) -> tuple[float, bool]:
    prod = e1 * e2
    if prod == 0:
        return 0.0, True
    return min(cross / math.sqrt(float(prod)), 1.0), False


def ncc_window(I1, I2, x: int, y: int, d: int, w=MatchWindow(), with_flag: bool = False):
    """Normalized cross-correlation without mean subtraction.

    ``sum(I1 * I2) / sqrt(sum(I1**2) * sum(I2**2))`` over the window. For
    8-bit intensities the value lies in [0, 1]. A window that is entirely
    zero has no defined correlation; it scores 0 and, with ``with_flag``,
    is reported as degenerate via the returned ``(value, degenerate)`` pair.
    """
    wa, wb = _window_pair(I1, I2, x, y, d, w)
    value, degenerate = _ncc_from_sums(int((wa * wb).sum()), int((wa * wa).sum()), int((wb * wb).sum()))
    return (value, degenerate) if with_flag else value


@dataclass(frozen=True, eq=False)
class CensusImage:
    """Census bit-vectors packed little-endian into ``(height, width, nbytes)`` uint8.

    Bit ``k`` corresponds to the k-th non-centre offset of the census window in
    row-major order (dy outer, dx inner). ``valid`` is False on the border band
    of width ``radius`` where the census window does not fit.
    """

    packed: np.ndarray
    nbits: int
    radius: int
    valid: np.ndarray

    @property
    def height(self) -> int:
        return self.packed.shape[0]

    @property
    def width(self) -> int:
        return self.packed.shape[1]

    @classmethod
    def from_bits(cls, bits, radius: int, valid=None) -> "CensusImage":
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 3:
            raise ValueError("bits must have shape (height, width, nbits)")
        if valid is None:
            valid = np.ones(bits.shape[:2], dtype=bool)
        packed = np.packbits(bits, axis=-1, bitorder="little")
        return cls(packed, bits.shape[2], radius, np.asarray(valid, dtype=bool))

    def bits(self) -> np.ndarray:
        return np.unpackbits(self.packed, axis=-1, count=self.nbits, bitorder="little").astype(bool)


def census_transform(I, census_radius: int = 2) -> CensusImage:
    """Per-pixel bit-vector with bit set where the neighbour is strictly darker than the centre."""
    if census_radius < 1:
        raise ValueError("census_radius must be at least 1")
    a = _pixels(I).astype(np.int16)
    h, w = a.shape
    r = census_radius
    nbits = (2 * r + 1) ** 2 - 1
    bits = np.zeros((h, w, nbits), dtype=bool)
    valid = np.zeros((h, w), dtype=bool)
    if h > 2 * r and w > 2 * r:
        centre = a[r:h - r, r:w - r]
        k = 0
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if dy == 0 and dx == 0:
                    continue
                nb = a[r + dy:h - r + dy, r + dx:w - r + dx]
                bits[r:h - r, r:w - r, k] = nb < centre
                k += 1
        valid[r:h - r, r:w - r] = True
    return CensusImage.from_bits(bits, r, valid)


def shd_window(C1: CensusImage, C2: CensusImage, x: int, y: int, d: int, w=MatchWindow(3)) -> int:
    """Sum over the window of the Hamming distance between census vectors at ``(x, y)`` and ``(x + d, y)``."""
    if C1.radius != C2.radius or C1.nbits != C2.nbits:
        raise ValueError(f"census radius mismatch: {C1.radius} vs {C2.radius}")
    if C1.packed.shape != C2.packed.shape:
        raise ValueError("census images differ in size")
    r = _window(w).radius
    _check_window(C1.packed.shape, x, y, d, r)
    v1 = C1.valid[y - r:y + r + 1, x - r:x + r + 1]
    v2 = C2.valid[y - r:y + r + 1, x + d - r:x + d + r + 1]
    if not (v1.all() and v2.all()):
        raise InvalidSampleError(f"window at (x={x}, y={y}, d={d}) covers census border pixels")
    p1 = C1.packed[y - r:y + r + 1, x - r:x + r + 1]
    p2 = C2.packed[y - r:y + r + 1, x + d - r:x + d + r + 1]
    return int(np.bitwise_count(p1 ^ p2).sum(dtype=np.int64))


@dataclass(frozen=True, eq=False)
class CostVolume:
    """Matching costs indexed ``[d - min_d, y, x]``.

    ``cost`` is int32 for SAD/SSD/SHD and float64 for NCC. Invalid entries hold
    0 and must be ignored. ``degenerate`` marks NCC entries whose window had
    zero energy (None for the other measures).
    """

    measure: Measure
    range: DisparityRange
    cost: np.ndarray
    valid: np.ndarray
    window: MatchWindow
    degenerate: np.ndarray | None = None

    @property
    def height(self) -> int:
        return self.cost.shape[1]

    @property
    def width(self) -> int:
        return self.cost.shape[2]

    def plane(self, d: int) -> np.ndarray:
        return self.cost[d - self.range.min_d]


def box_sum(a: np.ndarray, r: int) -> np.ndarray:
    """Sums over every full ``(2r+1)``-square window of ``a`` (output shrinks by ``2r`` per axis).

    Integer input is accumulated in int64, so the result is exact.
    """
    k = 2 * r + 1
    h, w = a.shape
    if h < k or w < k:
        return np.zeros((max(h - 2 * r, 0), max(w - 2 * r, 0)), dtype=np.int64)
    acc = np.int64 if np.issubdtype(a.dtype, np.integer) else np.float64
    c = np.zeros((h + 1, w), dtype=acc)
    np.cumsum(a, axis=0, dtype=acc, out=c[1:])
    v = c[k:] - c[:-k]
    c2 = np.zeros((v.shape[0], w + 1), dtype=acc)
    np.cumsum(v, axis=1, out=c2[:, 1:])
    return c2[:, k:] - c2[:, :-k]


def build_cost_volume(
    reference,
    match,
    measure,
    window=None,
    drange: DisparityRange = DisparityRange(),
    census_radius: int = 2,
) -> CostVolume:
    """Evaluate ``measure`` for every pixel and every disparity in ``drange``.

    Parameters
    ----------
    reference, match : GrayImage or 2-D uint8 array
        Rectified pair of equal size.
    measure : Measure or str
        One of ``sad``, ``ssd``, ``shd``, ``ncc``.
    window : MatchWindow or int, optional
        Aggregation window. Defaults to radius 4, or radius 3 for SHD.
    census_radius : int
        Census window radius, used by SHD only.

    Returns
    -------
    CostVolume
        Entry ``[k, y, x]`` equals the corresponding ``*_window`` value at
        disparity ``min_d + k``; entries whose window does not fit are invalid.
    """
    measure = Measure(measure)
    if window is None:
        window = MatchWindow(3) if measure is Measure.SHD else MatchWindow(4)
    window = _window(window)
    a, b = _pixels(reference), _pixels(match)
    if a.shape != b.shape:
        raise ValueError(f"image sizes differ: {a.shape} vs {b.shape}")
    h, w = a.shape
    drange.check_width(w)
    r = window.radius
    n = drange.count

    dtype = np.float64 if measure is Measure.NCC else np.int32
    cost = np.zeros((n, h, w), dtype=dtype)
    valid = np.zeros((n, h, w), dtype=bool)
    degenerate = np.zeros((n, h, w), dtype=bool) if measure is Measure.NCC else None

    if measure is Measure.SHD:
        c1, c2 = census_transform(a, census_radius), census_transform(b, census_radius)
        m = census_radius
        for k, d in enumerate(drange):
            wd = w - d
            if h - 2 * (m + r) < 1 or wd - 2 * (m + r) < 1:
                continue
            ham = np.bitwise_count(c1.packed[m:h - m, m:wd - m] ^ c2.packed[m:h - m, d + m:w - m])
            plane = ham.sum(axis=-1, dtype=np.int32)
            sl = (k, slice(m + r, h - m - r), slice(m + r, wd - m - r))
            cost[sl] = box_sum(plane, r)
            valid[sl] = True
        return CostVolume(measure, drange, cost, valid, window)

    ai = a.astype(np.int32)
    bi = b.astype(np.int32)
    if h - 2 * r < 1:
        return CostVolume(measure, drange, cost, valid, window, degenerate)

    if measure is Measure.NCC:
        e1 = box_sum(ai * ai, r)
        e2 = box_sum(bi * bi, r)

    for k, d in enumerate(drange):
        wd = w - d
        if wd - 2 * r < 1:
            continue
        sl = (k, slice(r, h - r), slice(r, wd - r))
        pa, pb = ai[:, :wd], bi[:, d:]
        if measure is Measure.SAD:
            cost[sl] = box_sum(np.abs(pa - pb), r)
        elif measure is Measure.SSD:
            diff = pa - pb
            cost[sl] = box_sum(diff * diff, r)
        else:
            cross = box_sum(pa * pb, r)
            prod = e1[:, :wd - 2 * r] * e2[:, d:]
            zero = prod == 0
            with np.errstate(divide="ignore", invalid="ignore"):
                sim = cross / np.sqrt(prod.astype(np.float64))
            sim = np.where(zero, 0.0, np.minimum(sim, 1.0))
            cost[sl] = 1.0 - sim
            degenerate[sl] = zero
        valid[sl] = True
    return CostVolume(measure, drange, cost, valid, window, degenerate)
