"""
Scoring a disparity map without ground truth
============================================

A third camera sits halfway along the baseline. Given a disparity d at a
reference pixel, the third view should show the same point at x + 0.5 d.
Pulling pixels from the third image at those positions predicts the
reference image; the absolute difference is the error image, and the share
of pixels under a tolerance is the frame accuracy n_t.
"""

import numpy as np

from stereoeval import DisparityMap, MatchConfig, MatchWindow, default_registry
from stereoeval.bench import SyntheticSpec, synthetic_triple
from stereoeval.predict import evaluate_frame

spec = SyntheticSpec(width=200, height=120, shift=6, alpha=0.5)
triple = synthetic_triple(spec)

truth = DisparityMap.constant(6, spec.height, spec.width)
ev, view, err = evaluate_frame(triple, truth, tolerance=0)
print(f"true disparity:  n_t={ev.n_t:.2f} coverage={ev.coverage:.4f}")

wrong = DisparityMap.constant(4, spec.height, spec.width)
ev, view, err = evaluate_frame(triple, wrong, tolerance=5)
print(f"off by two:      n_t={ev.n_t:.2f} mean |E|={ev.mean_abs_error:.2f}")

dmap = default_registry().run("sad", triple.reference, triple.match, MatchConfig())
for tol in (0, 2, 5, 10):
    ev, _, _ = evaluate_frame(triple, dmap, tolerance=tol)
    print(f"SAD matcher, tolerance {tol:2d}: n_t={ev.n_t:.2f}")

# windowed error sums |E| over a 3x3 block; the tolerance scales by 9
ev, _, err = evaluate_frame(triple, dmap, tolerance=5, window=MatchWindow(1))
print(f"3x3 error window: n_t={ev.n_t:.2f}, error image valid {err.valid.mean():.3f}")
