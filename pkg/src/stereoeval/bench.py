"""
End-to-end benchmark: synthetic trinocular data, the three-stage pipeline
(disparity, prediction error, statistics) and CSV report emission.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

import numpy as np

from .cost import MatchWindow, box_sum
from .imgio import (
    DatasetManifest,
    FrameRecord,
    FrameTriple,
    GrayImage,
    _write_atomic,
    encode_pgm,
    write_disparity,
    write_manifest,
)
from .matchers import (
    BUILTIN_NAMES,
    DisparityMap,
    MatchConfig,
    MatcherRegistry,
    default_registry,
)
from .predict import DEFAULT_TOLERANCE, FrameEval, evaluate_frame
from .stats import AccuracySeries, CaseReport, rank_case

log = logging.getLogger(__name__)

__all__ = [
    "NoiseModel",
    "SyntheticSpec",
    "SyntheticCase",
    "RunConfig",
    "BenchmarkResult",
    "synthetic_scene",
    "synthetic_triple",
    "generate_synthetic_case",
    "run_benchmark",
    "emit_report",
    "read_frames_csv",
    "report_from_frames",
    "format_value",
    "default_jobs",
]

JOBS_ENV = "STEREO_EVAL_JOBS"


# -- synthetic data ------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    """Per-image perturbation: ``none``, ``gaussian`` (sigma), ``salt-pepper`` (p) or ``gain-bias``."""

    kind: str = "none"
    sigma: float = 0.0
    p: float = 0.0
    gain: float = 1.0
    bias: float = 0.0

    KINDS = ("none", "gaussian", "salt-pepper", "gain-bias")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {self.KINDS}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("salt-pepper probability must lie in [0, 1]")
        if self.gain < 0:
            raise ValueError("gain must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        """Parse ``none``, ``gaussian:SIGMA``, ``salt-pepper:P`` or ``gain-bias:GAIN[:BIAS]``."""
        kind, *args = text.split(":")
        try:
            nums = [float(a) for a in args]
        except ValueError:
            raise ValueError(f"bad noise parameters in {text!r}") from None
        if kind == "none" and not nums:
            return cls()
        if kind == "gaussian" and len(nums) == 1:
            return cls(kind, sigma=nums[0])
        if kind == "salt-pepper" and len(nums) == 1:
            return cls(kind, p=nums[0])
        if kind == "gain-bias" and len(nums) in (1, 2):
            return cls(kind, gain=nums[0], bias=nums[1] if len(nums) == 2 else 0.0)
        raise ValueError(f"cannot parse noise model {text!r}")

    def apply(self, img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "none":
            return img
        if self.kind == "gaussian":
            out = img + rng.normal(0.0, self.sigma, img.shape)
        elif self.kind == "salt-pepper":
            u = rng.random(img.shape)
            out = img.astype(np.float64)
            out[u < self.p / 2] = 0
            out[(u >= self.p / 2) & (u < self.p)] = 255
        else:
            out = img * self.gain + self.bias
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)


ROLES = ("reference", "match", "third")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic lighting case.

    The scene is a fronto-parallel textured plane at constant disparity
    ``shift``. Texture is drawn once per seed from numpy's PCG64 generator
    (``np.random.default_rng(seed)``) as uniform integers in
    ``intensity_range`` and smoothed with a 3x3 box mean (rounded half up).
    Noise is redrawn for every frame from ``default_rng([seed, t, role])``.
    ``flicker`` scales the match image by ``1 + flicker * sin(2 pi t / flicker_period)``,
    mimicking brightness differences between unsynchronized cameras.
    """

    width: int = 160
    height: int = 120
    seed: int = 0
    shift: int = 6
    alpha: float = 0.5
    frames: int = 3
    case_id: str = "synthetic"
    noise_reference: NoiseModel = NoiseModel()
    noise_match: NoiseModel = NoiseModel()
    noise_third: NoiseModel = NoiseModel()
    intensity_range: tuple[int, int] = (30, 220)
    flicker: float = 0.0
    flicker_period: float = 10.0
    exact: bool = True

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if not (0 <= self.shift < self.width):
            raise ValueError(f"shift {self.shift} must lie in [0, width)")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        if self.frames < 1:
            raise ValueError("frames must be at least 1")
        lo, hi = self.intensity_range
        if not (0 <= lo <= hi <= 255):
            raise ValueError("intensity_range must satisfy 0 <= lo <= hi <= 255")
        if self.exact and not float(self.alpha * self.shift).is_integer():
            raise ValueError(f"alpha * shift = {self.alpha * self.shift} is not integral")

    def noise_for(self, role: str) -> NoiseModel:
        return getattr(self, f"noise_{role}")


def synthetic_scene(spec: SyntheticSpec) -> np.ndarray:
    """Smoothed texture canvas of shape ``(height, width + shift)``."""
    lo, hi = spec.intensity_range
    rng = np.random.default_rng(spec.seed)
    raw = rng.integers(lo, hi + 1, size=(spec.height + 2, spec.width + spec.shift + 2), dtype=np.int64)
    return ((box_sum(raw, 1) + 4) // 9).astype(np.uint8)


def _clean_views(spec: SyntheticSpec, canvas: np.ndarray):
    w, s = spec.width, spec.shift
    reference = canvas[:, s:s + w]
    match = canvas[:, :w]
    # third(x + alpha*s) == reference(x)
    start = s - spec.alpha * s
    if float(start).is_integer():
        k = int(start)
        third = canvas[:, k:k + w]
    else:
        u = start + np.arange(w)
        x0 = np.floor(u).astype(int)
        f = u - x0
        x1 = np.minimum(x0 + 1, canvas.shape[1] - 1)
        third = np.rint((1 - f) * canvas[:, x0] + f * canvas[:, x1]).astype(np.uint8)
    return reference, match, third


def synthetic_triple(spec: SyntheticSpec, t: int = 0, canvas: np.ndarray | None = None) -> FrameTriple:
    """Frame ``t`` of the synthetic case, built in memory."""
    if canvas is None:
        canvas = synthetic_scene(spec)
    views = dict(zip(ROLES, _clean_views(spec, canvas)))
    for k, role in enumerate(ROLES):
        rng = np.random.default_rng([spec.seed, t, k])
        img = spec.noise_for(role).apply(views[role], rng)
        if role == "match" and spec.flicker:
            g = 1.0 + spec.flicker * math.sin(2 * math.pi * t / spec.flicker_period)
            img = np.clip(np.rint(img * g), 0, 255).astype(np.uint8)
        views[role] = img
    return FrameTriple(
        GrayImage(views["reference"]),
        GrayImage(views["match"]),
        GrayImage(views["third"]),
        frame_index=t,
        baseline_fraction=spec.alpha,
    )


@dataclass(frozen=True)
class SyntheticCase:
    manifest: DatasetManifest
    manifest_path: Path
    ground_truth: DisparityMap
    ground_truth_path: Path


def generate_synthetic_case(spec: SyntheticSpec, out_dir) -> SyntheticCase:
    """Write ``spec.frames`` triples, the ground-truth disparity and ``manifest.txt`` under ``out_dir``."""
    out_dir = Path(out_dir)
    frame_dir = out_dir / "frames"
    frame_dir.mkdir(parents=True, exist_ok=True)
    canvas = synthetic_scene(spec)
    records = []
    for t in range(spec.frames):
        triple = synthetic_triple(spec, t, canvas)
        paths = []
        for role, img in zip(ROLES, (triple.reference, triple.match, triple.third)):
            p = frame_dir / f"{role}_{t:04d}.pgm"
            _write_atomic(p, encode_pgm(img.data))
            paths.append(p)
        records.append(FrameRecord(*paths))
    gt = DisparityMap.constant(spec.shift, spec.height, spec.width)
    gt_path = out_dir / "ground_truth.pgm"
    write_disparity(gt, gt_path)
    manifest_path = out_dir / "manifest.txt"
    manifest = DatasetManifest(spec.case_id, tuple(records), spec.alpha, source=manifest_path)
    write_manifest(manifest, manifest_path)
    return SyntheticCase(manifest, manifest_path, gt, gt_path)


# -- pipeline ------------------------------------------------------------------

def default_jobs() -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"{JOBS_ENV}={env!r} is not an integer") from None
        if n >= 1:
            return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RunConfig:
    matchers: tuple[str, ...] = BUILTIN_NAMES
    match: MatchConfig = MatchConfig()
    tolerance: int = DEFAULT_TOLERANCE
    error_window: int = 0
    baseline_fraction: float | None = None
    out_dir: Path | None = None
    jobs: int | None = None
    dump_images: bool = False
    interpolation: str = "bilinear"

    def __post_init__(self):
        if not self.matchers:
            raise ValueError("no matchers selected")
        if len(set(self.matchers)) != len(self.matchers):
            raise ValueError("matcher names repeat")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")
        MatchWindow(self.error_window)
        if self.baseline_fraction is not None and not (0.0 < self.baseline_fraction <= 1.0):
            raise ValueError("baseline_fraction must lie in (0, 1]")
        if self.jobs is not None and self.jobs < 1:
            raise ValueError("jobs must be at least 1")

    def check_registry(self, registry: MatcherRegistry) -> None:
        for name in self.matchers:
            registry.get(name)


@dataclass
class BenchmarkResult:
    report: CaseReport
    evals: dict[str, list[FrameEval]]
    failed_frames: list[int] = field(default_factory=list)
    errors: dict[int, str] = field(default_factory=dict)


def _dump(out_dir: Path, matcher: str, t: int, dmap, view, err):
    d = out_dir / "images" / matcher
    d.mkdir(parents=True, exist_ok=True)
    write_disparity(dmap, d / f"disparity_{t:04d}.pgm")
    _write_atomic(d / f"predicted_{t:04d}.pgm", encode_pgm(view.to_gray().data))
    e = np.where(err.valid, np.clip(np.rint(err.values), 0, 255), 0).astype(np.uint8)
    _write_atomic(d / f"error_{t:04d}.pgm", encode_pgm(e))


def run_benchmark(
    manifest: DatasetManifest,
    config: RunConfig = RunConfig(),
    registry: MatcherRegistry | None = None,
) -> BenchmarkResult:
    """Run every configured matcher on every frame and rank them.

    Work is split into (frame, matcher) units run on a thread pool; results
    are reassembled in manifest order, so output does not depend on
    ``config.jobs``. Frames whose images fail to load are skipped, logged
    and listed in ``failed_frames``; they do not count towards ``T``.
    """
    registry = registry or default_registry()
    config.check_registry(registry)
    jobs = config.jobs or default_jobs()
    error_window = MatchWindow(config.error_window)
    out_dir = Path(config.out_dir) if config.out_dir is not None else None

    def unit(t: int, name: str):
        try:
            triple = manifest.load_frame(t, config.baseline_fraction)
        except (OSError, ValueError) as exc:
            return t, name, None, str(exc)
        dmap = registry.get(name).produce(triple.reference, triple.match, config.match)
        ev, view, err = evaluate_frame(triple, dmap, config.tolerance, error_window, config.interpolation)
        if config.dump_images and out_dir is not None:
            _dump(out_dir, name, t, dmap, view, err)
        return t, name, ev, None

    units = [(t, name) for t in range(manifest.T) for name in config.matchers]
    if jobs == 1:
        results = [unit(t, n) for t, n in units]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda u: unit(*u), units))

    errors = {}
    table = {}
    for t, name, ev, msg in results:
        if msg is not None:
            errors.setdefault(t, msg)
        else:
            table[t, name] = ev
    failed = sorted(errors)
    for t in failed:
        log.warning("frame %d failed to load: %s", t, errors[t])
    good = [t for t in range(manifest.T) if t not in errors]
    if not good:
        raise RuntimeError(f"all {manifest.T} frames failed to load")
    evals = {name: [table[t, name] for t in good] for name in config.matchers}
    series = [AccuracySeries.from_evals(name, manifest.case_id, evals[name]) for name in config.matchers]
    report = rank_case(series, failed)
    return BenchmarkResult(report, evals, failed, errors)


# -- reports -------------------------------------------------------------------

def format_value(x: float, places: int = 2) -> str:
    """Fixed-point rendering with round-half-even on the exact binary value."""
    q = Decimal(1).scaleb(-places)
    return str(Decimal(float(x)).quantize(q, rounding=ROUND_HALF_EVEN))


SUMMARY_HEADER = ("matcher", "m_N", "variance", "rank")
FRAMES_HEADER = ("frame_index", "matcher", "n_t", "coverage", "mean_abs_error")


def _csv_text(rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def emit_report(report: CaseReport, out_dir) -> tuple[Path, Path]:
    """Write ``summary.csv`` (ranking order) and ``frames.csv`` (frame-major, one row per matcher)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = [SUMMARY_HEADER]
    for rank, name in enumerate(report.ranking, start=1):
        e = report.entries[name]
        summary.append((name, format_value(e.mean), format_value(e.variance), rank))
    frames = [FRAMES_HEADER]
    names = list(report.entries)
    for k in range(report.T):
        for name in names:
            s = report.entries[name].series
            if s.evals:
                ev = s.evals[k]
                frames.append((
                    ev.frame_index,
                    name,
                    format_value(ev.n_t),
                    format_value(ev.coverage, 4),
                    format_value(ev.mean_abs_error),
                ))
            else:
                frames.append((k, name, format_value(s.values[k]), "", ""))
    summary_path, frames_path = out_dir / "summary.csv", out_dir / "frames.csv"
    _write_atomic(summary_path, _csv_text(summary))
    _write_atomic(frames_path, _csv_text(frames))
    return summary_path, frames_path


def read_frames_csv(path, case_id: str = "case") -> list[AccuracySeries]:
    """Rebuild per-matcher series from a ``frames.csv`` file."""
    rows: dict[str, list[FrameEval]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(FRAMES_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            ev = FrameEval(
                frame_index=int(row["frame_index"]),
                n_t=float(row["n_t"]),
                coverage=float(row["coverage"]) if row["coverage"] else 0.0,
                mean_abs_error=float(row["mean_abs_error"]) if row["mean_abs_error"] else 0.0,
                tolerance=None,
            )
            rows.setdefault(row["matcher"], []).append(ev)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return [AccuracySeries.from_evals(name, case_id, evs) for name, evs in rows.items()]


def report_from_frames(path, case_id: str = "case") -> CaseReport:
    return rank_case(read_frames_csv(path, case_id))
