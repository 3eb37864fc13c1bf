"""
Third-view prediction and per-frame accuracy.

A disparity map is judged without ground truth: the third camera's image is
pulled back into the reference frame through the map, and the synthesized
view is compared against the reference image pixel by pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import MatchWindow, box_sum
from .imgio import FrameTriple, GrayImage
from .matchers import DisparityMap

__all__ = [
    "PredictedView",
    "ErrorImage",
    "FrameEval",
    "warp_third",
    "prediction_error_image",
    "frame_accuracy",
    "evaluate_frame",
    "DEFAULT_TOLERANCE",
]

DEFAULT_TOLERANCE = 5


@dataclass(frozen=True, eq=False)
class PredictedView:
    image: np.ndarray  # float64, reference-frame coordinates
    valid: np.ndarray

    @property
    def shape(self):
        return self.image.shape

    def to_gray(self) -> GrayImage:
        """Rounded 8-bit rendering; invalid pixels become 0."""
        img = np.where(self.valid, np.rint(self.image), 0)
        return GrayImage(np.clip(img, 0, 255).astype(np.uint8))


@dataclass(frozen=True, eq=False)
class ErrorImage:
    values: np.ndarray
    valid: np.ndarray
    window: MatchWindow


@dataclass(frozen=True)
class FrameEval:
    frame_index: int
    n_t: float
    coverage: float
    mean_abs_error: float
    tolerance: int | None

    def __post_init__(self):
        if not (0.0 <= self.n_t <= 100.0):
            raise ValueError(f"n_t must lie in [0, 100], got {self.n_t}")
        if not (0.0 <= self.coverage <= 1.0):
            raise ValueError(f"coverage must lie in [0, 1], got {self.coverage}")


def _sample_row_linear(img: np.ndarray, ys: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Interpolate ``img`` at integer rows ``ys`` and fractional columns ``u`` (all in range)."""
    w = img.shape[1]
    x0 = np.floor(u).astype(np.int64)
    frac = u - x0
    x1 = np.minimum(x0 + 1, w - 1)
    left = img[ys, x0].astype(np.float64)
    right = img[ys, x1].astype(np.float64)
    # integer positions take the exact pixel value
    return np.where(frac == 0.0, left, (1.0 - frac) * left + frac * right)


def warp_third(triple: FrameTriple, disparity: DisparityMap, interpolation: str = "bilinear") -> PredictedView:
    """Inverse-warp the third view into the reference frame.

    For a reference pixel ``(x, y)`` with disparity ``d`` the prediction is
    ``third(x + alpha * d, y)``, where ``alpha`` is the triple's baseline
    fraction. Rows are rectified, so bilinear sampling reduces to linear
    interpolation along the row. Pixels with INVALID disparity, or whose
    sample column leaves ``[0, width - 1]``, are invalid.

    ``interpolation`` is ``"bilinear"`` or ``"nearest"``.
    """
    if disparity.shape != triple.reference.shape:
        raise ValueError(f"disparity map {disparity.shape} does not match images {triple.reference.shape}")
    if interpolation not in ("bilinear", "nearest"):
        raise ValueError(f"unknown interpolation {interpolation!r}")
    third = triple.third.data
    h, w = third.shape
    alpha = triple.baseline_fraction
    d = disparity.data
    ys, xs = np.indices((h, w))
    u = xs + alpha * d.astype(np.float64)
    if interpolation == "nearest":
        u = np.floor(u + 0.5)
    valid = disparity.valid & (u >= 0.0) & (u <= w - 1)
    image = np.zeros((h, w), dtype=np.float64)
    image[valid] = _sample_row_linear(third, ys[valid], u[valid])
    return PredictedView(image, valid)


def prediction_error_image(predicted: PredictedView, actual, window=MatchWindow(0)) -> ErrorImage:
    """Windowed sum of absolute differences between the prediction and the recorded image.

    With the default radius 0 this is the per-pixel absolute difference. A
    pixel's error is defined only where every sample in its window is valid.
    """
    window = window if isinstance(window, MatchWindow) else MatchWindow(int(window))
    act = actual.data if isinstance(actual, GrayImage) else np.asarray(actual)
    if act.shape != predicted.shape:
        raise ValueError(f"predicted view {predicted.shape} and actual image {act.shape} differ in size")
    diff = np.where(predicted.valid, np.abs(predicted.image - act.astype(np.float64)), 0.0)
    r = window.radius
    if r == 0:
        return ErrorImage(diff, predicted.valid.copy(), window)
    h, w = act.shape
    values = np.zeros((h, w), dtype=np.float64)
    valid = np.zeros((h, w), dtype=bool)
    if h > 2 * r and w > 2 * r:
        full = box_sum(predicted.valid.astype(np.int32), r) == window.pixel_count
        valid[r:h - r, r:w - r] = full
        values[r:h - r, r:w - r] = np.where(full, box_sum(diff, r), 0.0)
    return ErrorImage(values, valid, window)


def frame_accuracy(error: ErrorImage, tolerance: int = DEFAULT_TOLERANCE, frame_index: int = 0) -> FrameEval:
    """Percentage of valid pixels whose error is within ``tolerance`` per window pixel.

    Invalid pixels are left out of the percentage; ``coverage`` reports how
    many pixels were valid. With no valid pixels both are 0.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    total = error.values.size
    n_valid = int(np.count_nonzero(error.valid))
    if n_valid == 0:
        return FrameEval(frame_index, 0.0, 0.0, 0.0, tolerance)
    npix = error.window.pixel_count
    vals = error.values[error.valid]
    good = int(np.count_nonzero(vals <= tolerance * npix))
    return FrameEval(
        frame_index=frame_index,
        n_t=100.0 * good / n_valid,
        coverage=n_valid / total,
        mean_abs_error=float(vals.sum() / (n_valid * npix)),
        tolerance=tolerance,
    )


def evaluate_frame(
    triple: FrameTriple,
    disparity: DisparityMap,
    tolerance: int = DEFAULT_TOLERANCE,
    window=MatchWindow(0),
    interpolation: str = "bilinear",
):
    """Warp, score and summarize one frame. Returns ``(FrameEval, PredictedView, ErrorImage)``."""
    view = warp_third(triple, disparity, interpolation)
    err = prediction_error_image(view, triple.reference, window)
    return frame_accuracy(err, tolerance, triple.frame_index), view, err
