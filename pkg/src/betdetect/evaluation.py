"""Monte Carlo harness, ratio diagnostic and regret auditor.

``monte_carlo`` repeats seeded runs of a detector (or a permutation
baseline) over a grid of significance levels.  Run ``i`` at grid index
``j`` under hypothesis tag ``h`` (0 for H0, 1 for H1) is seeded with
``derive_seed(master_seed, j, i, h)``; that one seed drives the x/y
streams, the detector's final draw and any permutation draws, so each
grid point and run can be reproduced on its own.  Results are reduced in
index order, so worker count never changes the output.
"""

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import PermutationConfig, batched_permutation_run
from .betting import BettingTrace
from .calibration import estimate_epsilon
from .detectors import DetectorConfig, run_detector
from .errors import ConfigurationError, DomainError, InputDataError
from .rng import STREAM_CALIBRATION, derive_seed, substream
from .simulation import StreamSpec, generate

TAG_H0 = 0
TAG_H1 = 1

REPORT_COLUMNS = ("alpha", "fpr", "mean_tau", "declared_fraction_h1")


@dataclass(frozen=True)
class AlphaGrid:
    values: tuple = tuple(np.linspace(0.005, 0.1, 20).tolist())

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(not (0.0 < v < 1.0) for v in vals):
            raise ConfigurationError("alpha grid values must lie in (0, 1)")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigurationError("alpha grid must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def linspace(cls, lo=0.005, hi=0.1, n=20):
        return cls(tuple(np.linspace(lo, hi, n).tolist()))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class EpsilonEstimation:
    """Per-run estimate of ``epsilon`` from a fresh human pool.

    ``pool_size`` scores are drawn from ``spec`` with the run's calibration
    substream and passed to ``estimate_epsilon``.
    """

    spec: StreamSpec
    pool_size: int = 20
    shuffles: int = 1000

    def to_dict(self):
        return {"spec": self.spec.to_dict(), "pool_size": self.pool_size, "shuffles": self.shuffles}


@dataclass
class MonteCarloReport:
    per_alpha: list
    runs: int
    ratio: Optional[float] = None
    config: dict = field(default_factory=dict)
    violation_count: int = 0
    master_seed: int = 0

    def rows(self):
        return [dict(zip(REPORT_COLUMNS, r)) for r in self.per_alpha]

    def to_dict(self):
        return {
            "per_alpha": self.rows(),
            "runs": self.runs,
            "ratio": self.ratio,
            "violation_count": self.violation_count,
            "master_seed": self.master_seed,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data):
        rows = [tuple(r[c] for c in REPORT_COLUMNS) for r in data["per_alpha"]]
        return cls(
            per_alpha=rows,
            runs=data["runs"],
            ratio=data.get("ratio"),
            config=data.get("config", {}),
            violation_count=data.get("violation_count", 0),
            master_seed=data.get("master_seed", 0),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for row in self.per_alpha:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v):
    return "" if v is None else repr(float(v))


def ratio_diagnostic(delta, epsilon, d):
    """Excess gap over the tolerance, relative to the room left below ``d``."""
    if not d > epsilon:
        raise DomainError(f"ratio needs d > epsilon, got d={d!r}, epsilon={epsilon!r}")
    return (delta - epsilon) / (d - epsilon)


def _run_one(cfg, spec_x, spec_y, seed, alpha, eps_est):
    T = cfg.time_budget
    if T is None:
        raise ConfigurationError("Monte Carlo runs need a finite time_budget")
    stream = generate(spec_x.with_seed(seed), spec_y.with_seed(seed), T)
    changes = {"alpha": alpha, "seed": seed}
    if eps_est is not None:
        pool = generate(eps_est.spec.with_seed(seed), eps_est.spec.with_seed(seed), eps_est.pool_size).x
        changes["epsilon"] = estimate_epsilon(pool, eps_est.shuffles, substream(seed, STREAM_CALIBRATION))
    run_cfg = replace(cfg, **changes)
    if isinstance(run_cfg, PermutationConfig):
        out = batched_permutation_run(run_cfg, stream, T)
    else:
        out = run_detector(run_cfg, stream)
    return out.declared, out.rejection_time, bool(out.violations)


def _alpha_point(args):
    """All runs of one grid point; returns per-run tuples in run order."""
    cfg, j, alpha, h0, h1, runs, master_seed, eps_est = args
    res = {}
    for tag, pair in ((TAG_H0, h0), (TAG_H1, h1)):
        if pair is None:
            res[tag] = []
            continue
        res[tag] = [
            _run_one(cfg, pair[0], pair[1], derive_seed(master_seed, j, i, tag), alpha, eps_est)
            for i in range(runs)
        ]
    return res


def _snapshot(cfg, h0, h1, runs, grid, master_seed, eps_est):
    def pair(p):
        return None if p is None else [p[0].to_dict(), p[1].to_dict()]

    kind = "permutation" if isinstance(cfg, PermutationConfig) else "detector"
    return {
        "kind": kind,
        "detector": cfg.to_dict(),
        "h0": pair(h0),
        "h1": pair(h1),
        "runs": runs,
        "grid": list(grid.values),
        "master_seed": master_seed,
        "epsilon_estimation": None if eps_est is None else eps_est.to_dict(),
    }


def _ratio(cfg, h1):
    if h1 is None or isinstance(cfg, PermutationConfig):
        return None
    if cfg.d_policy.kind != "constant":
        return None
    mx, my = h1[0].mean(), h1[1].mean()
    if mx is None or my is None:
        return None
    try:
        return ratio_diagnostic(abs(mx - my), cfg.epsilon, cfg.d_policy.value)
    except DomainError:
        return None


def monte_carlo(cfg, h0_streams, h1_streams, runs=1000, grid=None, master_seed=0, workers=1,
                epsilon_estimation=None):
    """Estimate FPR under H0 and rejection time under H1 at every grid level.

    ``h0_streams``/``h1_streams`` are ``(spec_x, spec_y)`` pairs; either may
    be ``None`` to skip that hypothesis (its columns are then ``None``).
    ``cfg`` is a ``DetectorConfig`` or ``PermutationConfig``; its ``alpha``
    and ``seed`` are replaced per run.  Retained H1 runs count with
    ``tau = T`` in ``mean_tau``.
    """
    if runs < 1:
        raise ConfigurationError(f"runs must be >= 1, got {runs}")
    if not isinstance(cfg, (DetectorConfig, PermutationConfig)):
        raise ConfigurationError(f"unsupported config type {type(cfg).__name__}")
    if h0_streams is None and h1_streams is None:
        raise ConfigurationError("need at least one of h0_streams, h1_streams")
    grid = AlphaGrid() if grid is None else grid
    if not isinstance(grid, AlphaGrid):
        grid = AlphaGrid(tuple(grid))
    jobs = [
        (cfg, j, a, h0_streams, h1_streams, runs, master_seed, epsilon_estimation)
        for j, a in enumerate(grid.values)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_alpha_point, jobs))
    else:
        results = [_alpha_point(job) for job in jobs]

    rows, violated = [], 0
    for alpha, res in zip(grid.values, results):
        h0, h1 = res[TAG_H0], res[TAG_H1]
        fpr = sum(r[0] for r in h0) / runs if h0 else None
        mean_tau = sum(r[1] for r in h1) / runs if h1 else None
        frac = sum(r[0] for r in h1) / runs if h1 else None
        violated += sum(r[2] for r in h0) + sum(r[2] for r in h1)
        rows.append((alpha, fpr, mean_tau, frac))
    return MonteCarloReport(
        per_alpha=rows,
        runs=runs,
        ratio=_ratio(cfg, h1_streams),
        config=_snapshot(cfg, h0_streams, h1_streams, runs, grid, master_seed, epsilon_estimation),
        violation_count=violated,
        master_seed=master_seed,
    )


def emit_report(report, destination, format="json", stem="report"):
    """Write ``report`` as ``<stem>.json``/``<stem>.csv`` into a directory, or to a file path.

    ``format`` is ``"json"``, ``"csv"`` or ``"both"``.  Returns the written paths.
    """
    if format not in ("json", "csv", "both"):
        raise ConfigurationError(f"format must be json, csv or both, got {format!r}")
    dest = Path(destination)
    formats = ("json", "csv") if format == "both" else (format,)
    paths = []
    for fmt in formats:
        if dest.suffix.lower() in (".json", ".csv"):
            path = dest.with_suffix("." + fmt)
        else:
            dest.mkdir(parents=True, exist_ok=True)
            path = dest / f"{stem}.{fmt}"
        text = report.to_json() if fmt == "json" else report.to_csv()
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths


def load_report(path):
    return MonteCarloReport.from_json(Path(path).read_text(encoding="utf-8"))


# -- regret auditing -----------------------------------------------------------


def _total_loss(g, theta):
    return float(-np.sum(np.log1p(-g * theta)))


def empirical_regret(trace, u):
    """``sum_t l_t(theta_t) - sum_t l_t(u)`` for the log-loss ``-ln(1 - g theta)``."""
    g = np.asarray(trace.g, dtype=float)
    theta = np.asarray(trace.theta, dtype=float)
    if np.any(1.0 - g * theta <= 0.0) or np.any(1.0 - g * u <= 0.0):
        raise DomainError("log-loss undefined: nonpositive wealth factor")
    return _total_loss(g, theta) - _total_loss(g, u)


def grid_minimizer(g, lo, hi, resolution=1e-4):
    """Minimizer of the cumulative log-loss over the grid ``lo, lo + r, ..., hi``.

    The cumulative loss is convex in ``theta``, so the grid argmin is found
    by bisection on the sign of consecutive differences; the result equals
    an exhaustive scan of the same grid.
    """
    g = np.asarray(g, dtype=float)
    n = int(math.floor((hi - lo) / resolution + 1e-9))
    last = n + 1 if lo + n * resolution < hi else n

    def pts(i):
        return min(lo + i * resolution, hi)

    def f(i):
        return _total_loss(g, pts(i))

    a, b = 0, last
    while a < b:
        m = (a + b) // 2
        if f(m + 1) < f(m):
            a = m + 1
        else:
            b = m
    return pts(a)


@dataclass(frozen=True)
class RegretAudit:
    empirical_regret: Optional[float]
    bound: float
    satisfied: Optional[bool]
    theta_star: Optional[float] = None
    reason: Optional[str] = None

    @property
    def skipped(self):
        return self.reason is not None

    def __iter__(self):
        return iter((self.empirical_regret, self.bound, self.satisfied))


def regret_bound(d_star, gamma, T, diameter):
    return math.log1p(4.0 * d_star * d_star * T) / (2.0 * gamma) + 0.5 * gamma * diameter * diameter


def regret_audit(trace, d_star, gamma, resolution=1e-4):
    """Compare ONS regret against its logarithmic bound.

    ``theta*`` is the grid minimizer over the intersection of every
    step's interval.  Traces with an out-of-bound outcome or a
    nonpositive factor are not audited; ``reason`` says why.  Unpacks as
    ``(empirical_regret, bound, satisfied)``.
    """
    if not isinstance(trace, BettingTrace):
        raise InputDataError("regret_audit needs a BettingTrace")
    g = np.asarray(trace.g, dtype=float)
    theta = np.asarray(trace.theta, dtype=float)
    lo = np.asarray(trace.lo, dtype=float)
    hi = np.asarray(trace.hi, dtype=float)
    T = len(g)
    if T == 0:
        raise InputDataError("empty trajectory")
    bound = regret_bound(d_star, gamma, T, hi[0] - lo[0])
    if np.any(np.abs(g) > d_star):
        return RegretAudit(None, bound, None, reason="outcome exceeds d_star")
    if np.any(1.0 - g * theta <= 0.0):
        return RegretAudit(None, bound, None, reason="nonpositive wealth factor")
    if np.any(theta < lo) or np.any(theta > hi):
        return RegretAudit(None, bound, None, reason="play outside its interval")
    L, H = float(lo.max()), float(hi.min())
    if L > H:
        return RegretAudit(None, bound, None, reason="intervals have empty intersection")
    if np.any(1.0 - g * L <= 0.0) or np.any(1.0 - g * H <= 0.0):
        return RegretAudit(None, bound, None, reason="comparator set leaves the log-loss domain")
    star = grid_minimizer(g, L, H, resolution)
    regret = empirical_regret(trace, star)
    return RegretAudit(regret, bound, regret <= bound + 1e-6, theta_star=star)
