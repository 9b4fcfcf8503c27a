"""Choosing the composite slack ``epsilon`` and the outcome bound ``d``.

Two recipes are supported.  The oracle recipe reads both from full score
pools known in advance; the estimated recipe derives ``epsilon`` from a
small human pool by random half splits and ``d`` from the first few
paired observations of the stream.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateBoundError, InputDataError


@dataclass(frozen=True)
class CalibrationResult:
    epsilon: float
    d: float
    provenance: str  # "oracle" or "estimated"
    samples_consumed: int = 0

    def to_dict(self):
        return asdict(self)


def _as_scores(values, name):
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise InputDataError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InputDataError(f"{name} contains non-finite scores")
    return arr


def estimate_epsilon(human_scores, shuffles=1000, rng=None):
    """Twice the mean absolute gap between the halves of random splits.

    The scores (20 in the reference recipe, any even count here) are
    shuffled ``shuffles`` times; each shuffle is cut into first and second
    half and the absolute difference of the half means is averaged.

    The scores are sorted before shuffling, so the result depends only on
    the multiset of scores and the generator state.
    """
    scores = np.sort(_as_scores(human_scores, "human_scores"))
    n = scores.size
    if n < 2:
        raise InputDataError(f"need at least 2 human scores, got {n}")
    if n % 2:
        raise InputDataError(f"need an even number of human scores, got {n}")
    if shuffles < 1:
        raise InputDataError(f"shuffles must be >= 1, got {shuffles}")
    if rng is None:
        rng = np.random.default_rng()
    half = n // 2
    perms = rng.permuted(np.tile(scores, (shuffles, 1)), axis=1)
    gaps = np.abs(perms[:, :half].mean(axis=1) - perms[:, half:].mean(axis=1))
    return float(2.0 * gaps.mean())


def estimate_d(prefix_x, prefix_y, n=10):
    """``2 * max_s |x_s - y_s|`` over the first ``n`` index-paired scores."""
    if n < 1:
        raise InputDataError(f"n must be >= 1, got {n}")
    x = _as_scores(prefix_x, "prefix_x")
    y = _as_scores(prefix_y, "prefix_y")
    if x.size < n or y.size < n:
        raise InputDataError(f"need {n} paired prefix scores, got {x.size} and {y.size}")
    d = 2.0 * float(np.max(np.abs(x[:n] - y[:n])))
    if not d > 0.0:
        raise DegenerateBoundError("estimated bound is 0: every prefix pair is equal")
    return d


def oracle_epsilon(human_scores_a, human_scores_b):
    """Absolute gap between the means of two human score pools."""
    a = _as_scores(human_scores_a, "human_scores_a")
    b = _as_scores(human_scores_b, "human_scores_b")
    return float(abs(a.mean() - b.mean()))


def oracle_d(scores_x, scores_y):
    """Largest ``|x_i - y_j|`` over all cross pairs."""
    x = _as_scores(scores_x, "scores_x")
    y = _as_scores(scores_y, "scores_y")
    return float(max(x.max() - y.min(), y.max() - x.min()))


def oracle_calibration(scores_x, scores_y, human_scores_a, human_scores_b):
    eps = oracle_epsilon(human_scores_a, human_scores_b)
    d = oracle_d(scores_x, scores_y)
    n = len(scores_x) + len(scores_y) + len(human_scores_a) + len(human_scores_b)
    return CalibrationResult(eps, d, "oracle", n)


def estimated_calibration(human_scores, prefix_x, prefix_y, n=10, shuffles=1000, rng=None):
    eps = estimate_epsilon(human_scores, shuffles=shuffles, rng=rng)
    d = estimate_d(prefix_x, prefix_y, n=n)
    return CalibrationResult(eps, d, "estimated", len(human_scores) + 2 * n)
