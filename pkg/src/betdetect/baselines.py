"""Batched permutation tests used as fixed-time baselines.

Every ``k`` observations the latest batch of ``x`` and ``y`` scores is
tested for a mean difference by a two-sample permutation test.  A batch
whose observed gap does not exceed ``epsilon`` is never tested (the
gate), matching the composite null ``|mu_x - mu_y| <= epsilon``.  The
per-batch level is either ``alpha`` every time (``correction="none"``)
or ``alpha / 2**i`` for batch ``i`` (``"geometric"``), which keeps the
total false-rejection budget below ``alpha``.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .detectors import DECLARED_ANYTIME, RETAINED, TestOutcome
from .errors import ConfigurationError, InputDataError
from .rng import STREAM_PERMUTATION, substream
from .simulation import as_stream

CORRECTIONS = ("none", "geometric")


@dataclass(frozen=True)
class PermutationConfig:
    batch_size: int
    alpha: float
    n_permutations: int = 2000
    correction: str = "none"
    epsilon: float = 0.0
    seed: int = 0
    time_budget: int = 500

    def __post_init__(self):
        if self.batch_size < 2:
            raise ConfigurationError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.n_permutations < 1:
            raise ConfigurationError(f"n_permutations must be >= 1, got {self.n_permutations}")
        if self.correction not in CORRECTIONS:
            raise ConfigurationError(f"correction must be one of {CORRECTIONS}, got {self.correction!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ConfigurationError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.time_budget < 1:
            raise ConfigurationError(f"time_budget must be >= 1, got {self.time_budget}")

    def threshold(self, i):
        """Level for batch ``i`` (1-based)."""
        return self.alpha if self.correction == "none" else self.alpha / 2.0**i

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def geometric_thresholds(alpha, n_batches):
    return [alpha / 2.0**i for i in range(1, n_batches + 1)]


def _batch_pair(batch_x, batch_y):
    x = np.asarray(batch_x, dtype=float).ravel()
    y = np.asarray(batch_y, dtype=float).ravel()
    if x.size != y.size:
        raise InputDataError(f"batch lengths differ: {x.size} vs {y.size}")
    if x.size == 0:
        raise InputDataError("empty batch")
    return x, y


def mean_gap(batch_x, batch_y):
    x, y = _batch_pair(batch_x, batch_y)
    return float(abs(x.mean() - y.mean()))


def permutation_pvalue(batch_x, batch_y, n_perm, rng):
    """Share of random relabelings whose mean gap strictly exceeds the observed one.

    The ``2k`` pooled scores are shuffled ``n_perm`` times and each shuffle
    is split into its first and last ``k`` entries.  Gaps within rounding
    error of the observed gap count as ties, not exceedances.
    """
    x, y = _batch_pair(batch_x, batch_y)
    if n_perm < 1:
        raise InputDataError(f"n_perm must be >= 1, got {n_perm}")
    k = x.size
    pooled = np.concatenate([x, y])
    observed = abs(x.mean() - y.mean())
    perms = rng.permuted(np.tile(pooled, (n_perm, 1)), axis=1)
    gaps = np.abs(perms[:, :k].mean(axis=1) - perms[:, k:].mean(axis=1))
    # splits equal to the observed one differ from it only by summation order
    tie = 4.0 * k * np.finfo(float).eps * float(np.max(np.abs(pooled)))
    return float(np.count_nonzero(gaps > observed + tie)) / n_perm


def batched_permutation_run(cfg, stream, T=None):
    """Test consecutive batches of ``cfg.batch_size`` until a rejection or ``T``.

    Returns a ``TestOutcome`` with ``mode="permutation"``; ``batches`` lists
    one record per inspected batch with its gap, p-value (``None`` when the
    gate stayed closed) and threshold.  A trailing partial batch is
    ignored.
    """
    stream = as_stream(stream)
    T = cfg.time_budget if T is None else int(T)
    if T < 1:
        raise InputDataError(f"T must be >= 1, got {T}")
    if len(stream) < T:
        raise InputDataError(f"stream has {len(stream)} observations, time budget needs {T}")
    x, y = stream.x, stream.y
    if not (np.all(np.isfinite(x[:T])) and np.all(np.isfinite(y[:T]))):
        raise InputDataError("stream contains non-finite scores")
    k = cfg.batch_size
    rng = substream(cfg.seed, STREAM_PERMUTATION)
    records = []
    decision, tau = RETAINED, T
    for i in range(1, T // k + 1):
        bx, by = x[(i - 1) * k : i * k], y[(i - 1) * k : i * k]
        gap = mean_gap(bx, by)
        level = cfg.threshold(i)
        if gap <= cfg.epsilon:
            records.append({"index": i, "delta_obs": gap, "p_value": None, "threshold": level})
            continue
        p = permutation_pvalue(bx, by, cfg.n_permutations, rng)
        records.append({"index": i, "delta_obs": gap, "p_value": p, "threshold": level})
        if p < level:
            decision, tau = DECLARED_ANYTIME, i * k
            break
    return TestOutcome(
        decision=decision,
        rejection_time=tau,
        time_budget=T,
        mode="permutation",
        alpha=cfg.alpha,
        epsilon=cfg.epsilon,
        g=np.asarray(x[:tau] - y[:tau], dtype=float),
        batches=tuple(records),
    )
