"""
Disparity producers and the matcher registry.

Built-in matchers: winner-take-all over each of the four local measures,
error-energy smoothing (``gem``) and row-wise region growing (``lgbs``).
Anything else enters as a :class:`MatcherDescriptor` plugin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cost import (
    CostVolume,
    DisparityRange,
    MatchWindow,
    Measure,
    build_cost_volume,
)
from .imgio import GrayImage

__all__ = [
    "INVALID",
    "DisparityMap",
    "GemParams",
    "LgbsParams",
    "MatchConfig",
    "MatcherDescriptor",
    "MatcherRegistry",
    "DuplicateMatcherError",
    "UnknownMatcherError",
    "match_wta",
    "match_gem",
    "match_lgbs",
    "smooth_energy",
    "local_matcher",
    "default_registry",
    "register_matcher",
    "BUILTIN_NAMES",
]

INVALID = -1


@dataclass(frozen=True, eq=False)
class DisparityMap:
    """Integer disparity per pixel; ``INVALID`` (-1) where no disparity was assigned."""

    data: np.ndarray
    min_d: int
    max_d: int

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.int32)
        if arr.ndim != 2:
            raise ValueError("disparity map must be 2-D")
        ok = arr == INVALID
        inside = (arr >= self.min_d) & (arr <= self.max_d)
        if not np.all(ok | inside):
            raise ValueError(f"disparities outside [{self.min_d}, {self.max_d}]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def constant(cls, d: int, height: int, width: int) -> "DisparityMap":
        return cls(np.full((height, width), d, dtype=np.int32), d, d)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def valid(self) -> np.ndarray:
        return self.data != INVALID

    def __eq__(self, other):
        if not isinstance(other, DisparityMap):
            return NotImplemented
        return (
            self.min_d == other.min_d
            and self.max_d == other.max_d
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None


def _wta(cost: np.ndarray, valid: np.ndarray, drange: DisparityRange):
    """Argmin over valid planes (first minimum wins). Returns (disparity, best_cost, any_valid)."""
    if np.issubdtype(cost.dtype, np.integer):
        fill = np.iinfo(cost.dtype).max
    else:
        fill = np.inf
    masked = np.where(valid, cost, fill)
    k = np.argmin(masked, axis=0)
    best = np.take_along_axis(masked, k[None], axis=0)[0]
    any_valid = valid.any(axis=0)
    disp = np.where(any_valid, k + drange.min_d, INVALID).astype(np.int32)
    return disp, best, any_valid


def match_wta(volume: CostVolume) -> DisparityMap:
    """Per pixel, the smallest-cost disparity among valid entries; ties go to the smaller disparity."""
    disp, _, _ = _wta(volume.cost, volume.valid, volume.range)
    return DisparityMap(disp, volume.range.min_d, volume.range.max_d)


@dataclass(frozen=True)
class GemParams:
    window: MatchWindow = MatchWindow(4)
    range: DisparityRange = DisparityRange()
    filter_radius: int = 1
    iterations: int = 5

    def __post_init__(self):
        if self.filter_radius < 0:
            raise ValueError("filter_radius must be non-negative")
        if not (0 <= self.iterations <= 64):
            raise ValueError("iterations must lie in [0, 64]")


def _shifted_sum(a: np.ndarray, r: int, axis: int) -> np.ndarray:
    """Zero-padded sum of ``a`` over offsets -r..r along ``axis``."""
    out = a.copy()
    n = a.shape[axis]
    for s in range(1, r + 1):
        if s >= n:
            break
        lo = [slice(None)] * a.ndim
        hi = [slice(None)] * a.ndim
        lo[axis], hi[axis] = slice(0, n - s), slice(s, n)
        out[tuple(lo)] += a[tuple(hi)]
        out[tuple(hi)] += a[tuple(lo)]
    return out


def smooth_energy(cost: np.ndarray, valid: np.ndarray, radius: int, iterations: int) -> np.ndarray:
    """Repeated normalized box filter over each disparity plane, averaging valid entries only.

    ``cost`` and ``valid`` are ``(D, H, W)``. Invalid entries stay invalid and
    never contribute to their neighbours.
    """
    if iterations == 0 or radius == 0:
        return cost
    weight = valid.astype(np.float64)
    counts = _shifted_sum(_shifted_sum(weight, radius, 1), radius, 2)
    e = np.where(valid, cost, 0).astype(np.float64)
    for _ in range(iterations):
        total = _shifted_sum(_shifted_sum(e, radius, 1), radius, 2)
        with np.errstate(invalid="ignore", divide="ignore"):
            e = np.where(valid, total / counts, 0.0)
    return e


def match_gem(reference, match, params: GemParams = GemParams()) -> DisparityMap:
    """Error-energy matching: SSD energy planes, iterated box smoothing, then winner-take-all."""
    vol = build_cost_volume(reference, match, Measure.SSD, params.window, params.range)
    energy = smooth_energy(vol.cost, vol.valid, params.filter_radius, params.iterations)
    disp, _, _ = _wta(energy, vol.valid, params.range)
    return DisparityMap(disp, params.range.min_d, params.range.max_d)


@dataclass(frozen=True)
class LgbsParams:
    """Line-growing parameters. ``None`` thresholds scale with the window area (2x and 4x pixel count)."""

    window: MatchWindow = MatchWindow(4)
    range: DisparityRange = DisparityRange()
    seed_threshold: float | None = None
    grow_threshold: float | None = None
    max_growth: int = 64

    def __post_init__(self):
        if self.max_growth < 1:
            raise ValueError("max_growth must be at least 1")
        for name in ("seed_threshold", "grow_threshold"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def seed(self) -> float:
        if self.seed_threshold is None:
            return 2.0 * self.window.pixel_count
        return self.seed_threshold

    @property
    def grow(self) -> float:
        if self.grow_threshold is None:
            return 4.0 * self.window.pixel_count
        return self.grow_threshold


def match_lgbs(reference, match, params: LgbsParams = LgbsParams()) -> DisparityMap:
    """Line-growing matcher.

    Pixels are visited in row-major order. An unassigned pixel whose best SSD
    energy is at most the seed threshold becomes a root carrying its
    winner-take-all disparity. The root's region then extends left and right
    along the row, at most ``max_growth`` pixels each way, claiming unassigned
    pixels whose energy at the root's disparity is below the grow threshold.
    Growth in a direction stops at the first pixel that fails. Pixels never
    claimed are INVALID.

    Rows never interact, but within a row the claim order defines the result,
    so each row is processed sequentially.
    """
    drange = params.range
    vol = build_cost_volume(reference, match, Measure.SSD, params.window, drange)
    best_d, best_e, any_valid = _wta(vol.cost, vol.valid, drange)
    seed, grow = params.seed, params.grow
    h, w = vol.cost.shape[1:]
    out = np.full((h, w), INVALID, dtype=np.int32)

    is_root = any_valid & (best_e <= seed)
    for y in range(h):
        roots = np.flatnonzero(is_root[y])
        if roots.size == 0:
            continue
        row = out[y]
        planes = {}
        bd = best_d[y].tolist()
        assigned = [False] * w
        for x in roots.tolist():
            if assigned[x]:
                continue
            d = bd[x]
            k = d - drange.min_d
            if k not in planes:
                planes[k] = (vol.cost[k, y].tolist(), vol.valid[k, y].tolist())
            ck, vk = planes[k]
            assigned[x] = True
            row[x] = d
            for step in (1, -1):
                xx = x + step
                for _ in range(params.max_growth):
                    if xx < 0 or xx >= w or assigned[xx] or not vk[xx] or not (ck[xx] < grow):
                        break
                    assigned[xx] = True
                    row[xx] = d
                    xx += step
    return DisparityMap(out, drange.min_d, drange.max_d)


# -- registry ----------------------------------------------------------------

@dataclass(frozen=True)
class MatchConfig:
    """Parameters handed to every matcher's ``produce`` function.

    ``window`` drives SAD/SSD/NCC and the energy of GEM and LGBS; SHD uses
    ``shd_window`` over census vectors of radius ``census_radius``.
    """

    range: DisparityRange = DisparityRange()
    window: MatchWindow = MatchWindow(4)
    shd_window: MatchWindow = MatchWindow(3)
    census_radius: int = 2
    gem_filter_radius: int = 1
    gem_iterations: int = 5
    lgbs_seed_threshold: float | None = None
    lgbs_grow_threshold: float | None = None
    lgbs_max_growth: int = 64

    def gem_params(self) -> GemParams:
        return GemParams(self.window, self.range, self.gem_filter_radius, self.gem_iterations)

    def lgbs_params(self) -> LgbsParams:
        return LgbsParams(
            self.window,
            self.range,
            self.lgbs_seed_threshold,
            self.lgbs_grow_threshold,
            self.lgbs_max_growth,
        )


Producer = Callable[[GrayImage, GrayImage, MatchConfig], DisparityMap]


@dataclass(frozen=True)
class MatcherDescriptor:
    name: str
    produce: Producer
    description: str = ""


class DuplicateMatcherError(KeyError):
    def __str__(self):
        return f"matcher {self.args[0]!r} is already registered"


class UnknownMatcherError(KeyError):
    def __str__(self):
        return f"unknown matcher {self.args[0]!r}"


def local_matcher(measure, window: int | MatchWindow | None = None) -> Producer:
    """Winner-take-all producer for one measure, optionally pinning the window radius."""
    measure = Measure(measure)

    def produce(reference, match, config: MatchConfig) -> DisparityMap:
        if window is not None:
            win = window if isinstance(window, MatchWindow) else MatchWindow(window)
        elif measure is Measure.SHD:
            win = config.shd_window
        else:
            win = config.window
        vol = build_cost_volume(reference, match, measure, win, config.range, config.census_radius)
        return match_wta(vol)

    return produce


def _gem(reference, match, config: MatchConfig) -> DisparityMap:
    return match_gem(reference, match, config.gem_params())


def _lgbs(reference, match, config: MatchConfig) -> DisparityMap:
    return match_lgbs(reference, match, config.lgbs_params())


BUILTIN_NAMES = ("sad", "ssd", "shd", "ncc", "gem", "lgbs")


class MatcherRegistry:
    """Name -> :class:`MatcherDescriptor`. Populate during setup, then treat as read-only."""

    def __init__(self):
        self._matchers: dict[str, MatcherDescriptor] = {}

    def register(self, descriptor: MatcherDescriptor) -> None:
        if descriptor.name in self._matchers:
            raise DuplicateMatcherError(descriptor.name)
        self._matchers[descriptor.name] = descriptor

    def get(self, name: str) -> MatcherDescriptor:
        try:
            return self._matchers[name]
        except KeyError:
            raise UnknownMatcherError(name) from None

    def names(self) -> list[str]:
        return list(self._matchers)

    def __contains__(self, name) -> bool:
        return name in self._matchers

    def __len__(self) -> int:
        return len(self._matchers)

    def run(self, name: str, reference, match, config: MatchConfig = MatchConfig()) -> DisparityMap:
        return self.get(name).produce(reference, match, config)


def register_matcher(registry: MatcherRegistry, descriptor: MatcherDescriptor) -> None:
    registry.register(descriptor)


def default_registry() -> MatcherRegistry:
    """A fresh registry holding the six built-in matchers."""
    reg = MatcherRegistry()
    for m in Measure:
        reg.register(MatcherDescriptor(m.value, local_matcher(m), f"{m.value.upper()} + winner-take-all"))
    reg.register(MatcherDescriptor("gem", _gem, "smoothed SSD error energy + winner-take-all"))
    reg.register(MatcherDescriptor("lgbs", _lgbs, "row-wise line growing from low-energy roots"))
    return reg
