"""Command-line entry point: ``stereo-eval {match,predict,bench,synth,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    NoiseModel,
    RunConfig,
    SyntheticSpec,
    default_jobs,
    emit_report,
    generate_synthetic_case,
    report_from_frames,
    run_benchmark,
)
from .cost import DisparityRange, MatchWindow
from .imgio import FrameTriple, GrayImage, load_image, load_manifest, read_disparity, save_pgm, write_disparity
from .matchers import BUILTIN_NAMES, MatchConfig, default_registry
from .predict import DEFAULT_TOLERANCE, evaluate_frame

PROG = "stereo-eval"


def _add_match_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window", type=int, default=None,
                   help="aggregation window radius for every measure (default: 4, SHD 3)")
    p.add_argument("--census", type=int, default=2, help="census radius for SHD (default: 2)")
    p.add_argument("--dmin", type=int, default=0)
    p.add_argument("--dmax", type=int, default=15)
    p.add_argument("--gem-iterations", type=int, default=5)
    p.add_argument("--gem-filter", type=int, default=1, help="GEM smoothing radius (default: 1)")
    p.add_argument("--lgbs-seed", type=float, default=None)
    p.add_argument("--lgbs-grow", type=float, default=None)
    p.add_argument("--lgbs-max-growth", type=int, default=64)


def _match_config(args) -> MatchConfig:
    kw = {}
    if args.window is not None:
        kw["window"] = MatchWindow(args.window)
        kw["shd_window"] = MatchWindow(args.window)
    return MatchConfig(
        range=DisparityRange(args.dmin, args.dmax),
        census_radius=args.census,
        gem_filter_radius=args.gem_filter,
        gem_iterations=args.gem_iterations,
        lgbs_seed_threshold=args.lgbs_seed,
        lgbs_grow_threshold=args.lgbs_grow,
        lgbs_max_growth=args.lgbs_max_growth,
        **kw,
    )


def _split_names(text: str) -> tuple[str, ...]:
    return tuple(n.strip() for n in text.split(",") if n.strip())


def _jobs(value):
    return value if value is not None else default_jobs()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Ground-truth-free stereo matcher benchmarking.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("match", help="compute one disparity map")
    p.add_argument("reference")
    p.add_argument("match")
    p.add_argument("--matchers", "--matcher", dest="matcher", default="sad", help="matcher name (default: sad)")
    p.add_argument("--out", required=True, help="output 16-bit disparity PGM")
    _add_match_options(p)

    p = sub.add_parser("predict", help="synthesize the third view from a disparity map and score it")
    p.add_argument("reference")
    p.add_argument("third")
    p.add_argument("disparity")
    p.add_argument("--alpha", type=float, default=0.5, help="third camera's baseline fraction")
    p.add_argument("--tolerance", type=int, default=DEFAULT_TOLERANCE)
    p.add_argument("--error-window", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for predicted.pgm and error.pgm")

    p = sub.add_parser("bench", help="run matchers over a manifest and write reports")
    p.add_argument("--manifest", required=True)
    p.add_argument("--matchers", default=",".join(BUILTIN_NAMES))
    p.add_argument("--tolerance", type=int, default=DEFAULT_TOLERANCE)
    p.add_argument("--error-window", type=int, default=0)
    p.add_argument("--alpha", type=float, default=None, help="override the manifest's baseline fraction")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=None, help="worker threads (fallback: $STEREO_EVAL_JOBS, then CPU count)")
    p.add_argument("--dump-images", action="store_true")
    p.add_argument("--interpolation", choices=("bilinear", "nearest"), default="bilinear")
    _add_match_options(p)

    p = sub.add_parser("synth", help="generate a synthetic trinocular case")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=160)
    p.add_argument("--height", type=int, default=120)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shift", type=int, default=6)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--frames", type=int, default=3)
    p.add_argument("--case", default="synthetic")
    p.add_argument("--noise", action="append", default=[], metavar="ROLE=MODEL",
                   help="e.g. match=gain-bias:1.2:0 or reference=gaussian:10; ROLE may be 'all'")
    p.add_argument("--flicker", type=float, default=0.0)

    p = sub.add_parser("report", help="recompute summary.csv from a frames.csv")
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--case", default="case")
    return parser


def _cmd_match(args) -> int:
    registry = default_registry()
    desc = registry.get(args.matcher)
    ref, mat = load_image(args.reference), load_image(args.match)
    dmap = desc.produce(ref, mat, _match_config(args))
    write_disparity(dmap, args.out)
    return 0


def _cmd_predict(args) -> int:
    ref, third = load_image(args.reference), load_image(args.third)
    dmap = read_disparity(args.disparity)
    triple = FrameTriple(ref, ref, third, 0, args.alpha)
    ev, view, err = evaluate_frame(triple, dmap, args.tolerance, MatchWindow(args.error_window))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_pgm(view.to_gray(), out / "predicted.pgm")
    e = np.where(err.valid, np.clip(np.rint(err.values), 0, 255), 0).astype(np.uint8)
    save_pgm(GrayImage(e), out / "error.pgm")
    print(f"n_t={ev.n_t:.2f} coverage={ev.coverage:.4f} mean_abs_error={ev.mean_abs_error:.2f}")
    return 0


def _cmd_bench(args) -> int:
    registry = default_registry()
    names = _split_names(args.matchers)
    for n in names:
        registry.get(n)
    manifest = load_manifest(args.manifest)
    config = RunConfig(
        matchers=names,
        match=_match_config(args),
        tolerance=args.tolerance,
        error_window=args.error_window,
        baseline_fraction=args.alpha,
        out_dir=Path(args.out),
        jobs=_jobs(args.jobs),
        dump_images=args.dump_images,
        interpolation=args.interpolation,
    )
    result = run_benchmark(manifest, config, registry)
    emit_report(result.report, args.out)
    if result.failed_frames:
        print(f"{PROG}: {len(result.failed_frames)} frame(s) failed and were excluded: "
              f"{result.failed_frames}", file=sys.stderr)
    return 0


def _parse_noise(items):
    out = {}
    for item in items:
        role, sep, model = item.partition("=")
        if not sep:
            raise ValueError(f"--noise expects ROLE=MODEL, got {item!r}")
        roles = ("reference", "match", "third") if role == "all" else (role,)
        for r in roles:
            if r not in ("reference", "match", "third"):
                raise ValueError(f"unknown image role {r!r}")
            out[f"noise_{r}"] = NoiseModel.parse(model)
    return out


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        width=args.width,
        height=args.height,
        seed=args.seed,
        shift=args.shift,
        alpha=args.alpha,
        frames=args.frames,
        case_id=args.case,
        flicker=args.flicker,
        exact=False,
        **_parse_noise(args.noise),
    )
    case = generate_synthetic_case(spec, args.out)
    print(case.manifest_path)
    return 0


def _cmd_report(args) -> int:
    report = report_from_frames(args.frames, args.case)
    emit_report(report, args.out)
    return 0


COMMANDS = {
    "match": _cmd_match,
    "predict": _cmd_predict,
    "bench": _cmd_bench,
    "synth": _cmd_synth,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format=f"{PROG}: %(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
