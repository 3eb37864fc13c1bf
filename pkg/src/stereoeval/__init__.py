"""Stereo matcher benchmarking by third-view prediction error."""

__version__ = "0.1.0"

from .cost import (
    CensusImage,
    CostVolume,
    DisparityRange,
    MatchWindow,
    Measure,
    build_cost_volume,
    census_transform,
    ncc_window,
    sad_window,
    shd_window,
    ssd_window,
)
from .imgio import (
    DatasetManifest,
    FrameTriple,
    GrayImage,
    load_manifest,
    load_pgm,
    load_ppm_as_gray,
    read_disparity,
    save_pgm,
    write_disparity,
)
from .matchers import (
    BUILTIN_NAMES,
    INVALID,
    DisparityMap,
    GemParams,
    LgbsParams,
    MatchConfig,
    MatcherDescriptor,
    MatcherRegistry,
    default_registry,
    match_gem,
    match_lgbs,
    match_wta,
    register_matcher,
)
from .predict import FrameEval, frame_accuracy, prediction_error_image, warp_third
from .stats import AccuracySeries, CaseReport, accuracy_variance, mean_accuracy, overall_best, rank_case
from .bench import (
    NoiseModel,
    RunConfig,
    SyntheticSpec,
    emit_report,
    generate_synthetic_case,
    run_benchmark,
    synthetic_triple,
)
