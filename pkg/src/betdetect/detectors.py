"""Sequential detectors built on the betting core.

Two tests are provided:

* ``simple``: one wealth process on ``g = x - y`` with threshold ``1/alpha``.
* ``composite``: tolerates a mean gap up to ``epsilon`` by running side A
  on ``g - eps`` and side B on ``-g - eps``, both betting in
  ``[-1/(2d), 0]`` and each tested at level ``alpha/2`` (threshold
  ``2/alpha``).

``simple_step``/``composite_step`` are the reference state machines.
``run_detector`` drives the same recursion through the compiled (or
fallback) kernels in ``kernels`` and is what the harness calls.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .betting import (
    DEFAULT_GAMMA,
    BettingTrace,
    OnsBettorState,
    WealthState,
    decision_interval,
    ons_update,
    reclamp,
    wealth_step,
)
from .calibration import estimate_d
from .errors import (
    ConfigurationError,
    InputDataError,
    InvalidInputError,
    WealthViolationError,
)
from .rng import STREAM_FINALIZE, substream
from .simulation import as_stream

DECLARED_ANYTIME = "llm_declared_anytime"
DECLARED_AT_BUDGET = "llm_declared_at_budget"
RETAINED = "retained"

MODES = ("simple", "composite")
VIOLATION_POLICIES = ("flag_and_continue", "abort")


@dataclass(frozen=True)
class DPolicy:
    """Where the per-step outcome bound comes from.

    ``constant``: a fixed ``d``.  ``per_step``: ``sequence[t-1]`` bounds
    step ``t``.  ``estimate_from_prefix``: ``d = 2 max_s |x_s - y_s|`` over
    the first ``prefix`` pairs; those steps are consumed without betting.
    """

    kind: str = "constant"
    value: Optional[float] = None
    sequence: Optional[tuple] = None
    prefix: int = 10

    @classmethod
    def constant(cls, d):
        return cls("constant", value=float(d))

    @classmethod
    def per_step(cls, sequence):
        return cls("per_step", sequence=tuple(float(v) for v in sequence))

    @classmethod
    def estimate_from_prefix(cls, n=10):
        return cls("estimate_from_prefix", prefix=int(n))

    def __post_init__(self):
        if self.kind == "constant":
            if self.value is None or not (math.isfinite(self.value) and self.value > 0):
                raise ConfigurationError(f"d must be finite and > 0, got {self.value!r}")
        elif self.kind == "per_step":
            if not self.sequence:
                raise ConfigurationError("per_step d policy needs a nonempty sequence")
            bad = [v for v in self.sequence if not (math.isfinite(v) and v > 0)]
            if bad:
                raise ConfigurationError(f"per_step d values must be finite and > 0, got {bad[0]!r}")
        elif self.kind == "estimate_from_prefix":
            if self.prefix < 1:
                raise ConfigurationError(f"prefix must be >= 1, got {self.prefix}")
        else:
            raise ConfigurationError(f"unknown d_policy {self.kind!r}")

    def supplied(self):
        if self.kind == "constant":
            return (self.value,)
        if self.kind == "per_step":
            return self.sequence
        return ()

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "d": self.value}
        if self.kind == "per_step":
            return {"kind": "per_step", "sequence": list(self.sequence)}
        return {"kind": "estimate_from_prefix", "prefix": self.prefix}

    @classmethod
    def from_dict(cls, data):
        kind = data.get("kind", "constant")
        if kind == "constant":
            return cls.constant(data["d"])
        if kind == "per_step":
            return cls.per_step(data["sequence"])
        if kind == "estimate_from_prefix":
            return cls.estimate_from_prefix(data.get("prefix", 10))
        raise ConfigurationError(f"unknown d_policy {kind!r}")


@dataclass(frozen=True)
class DetectorConfig:
    alpha: float
    d_policy: DPolicy
    mode: str = "composite"
    epsilon: float = 0.0
    gamma: float = DEFAULT_GAMMA
    time_budget: Optional[int] = 500
    seed: int = 0
    violation_policy: str = "flag_and_continue"

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ConfigurationError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        if self.mode == "simple" and self.epsilon != 0.0:
            raise ConfigurationError("epsilon applies to composite mode only; use 0 for simple")
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ConfigurationError(f"gamma must be finite and > 0, got {self.gamma!r}")
        if self.time_budget is not None and self.time_budget < 1:
            raise ConfigurationError(f"time_budget must be >= 1 or None, got {self.time_budget}")
        if self.violation_policy not in VIOLATION_POLICIES:
            raise ConfigurationError(
                f"violation_policy must be one of {VIOLATION_POLICIES}, got {self.violation_policy!r}"
            )
        if self.mode == "composite":
            for d in self.d_policy.supplied():
                if not self.epsilon < d:
                    raise ConfigurationError(f"epsilon={self.epsilon} must be < every d (got d={d})")

    @property
    def threshold(self):
        return (2.0 if self.mode == "composite" else 1.0) / self.alpha

    def to_dict(self):
        data = asdict(self)
        data["d_policy"] = self.d_policy.to_dict()
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["d_policy"] = DPolicy.from_dict(data["d_policy"])
        return cls(**data)


@dataclass(frozen=True)
class SimpleDetectorState:
    bettor: OnsBettorState
    wealth: WealthState
    declared: bool = False
    bound: float = 1.0
    violations: tuple = ()


@dataclass(frozen=True)
class CompositeDetectorState:
    side_a: tuple
    side_b: tuple
    epsilon: float
    declared: bool = False
    bound: float = 1.0
    violations: tuple = ()


def initial_state(cfg, d_first, start_step=0):
    """Fresh detector state whose first betting step is bounded by ``d_first``."""
    interval = decision_interval(d_first, cfg.mode)
    bettor = OnsBettorState.initial(interval, cfg.gamma)
    wealth = WealthState(1.0, start_step)
    if cfg.mode == "simple":
        return SimpleDetectorState(bettor, wealth, bound=float(d_first))
    if not cfg.epsilon < d_first:
        raise ConfigurationError(f"epsilon={cfg.epsilon} must be < d={d_first}")
    return CompositeDetectorState((bettor, wealth), (bettor, wealth), cfg.epsilon, bound=float(d_first))


def simple_step(state, score_x, score_y, d_next, cfg):
    """Observe one pair, update wealth, test, then move ``theta``.

    Returns ``(new_state, declared)``.  A nonpositive wealth factor is
    handled per ``cfg.violation_policy``: ``abort`` raises
    ``WealthViolationError``; ``flag_and_continue`` records the step, sets
    the wealth to 0 and skips the gradient step.
    """
    if state.declared:
        raise InvalidInputError("detector has already declared")
    if cfg.mode != "simple":
        raise ConfigurationError("simple_step needs a simple-mode config")
    next_interval = decision_interval(d_next, "simple")
    t = state.wealth.step + 1
    g = score_x - score_y
    bettor = state.bettor
    flagged = abs(g) > state.bound
    factor = 1.0 - g * bettor.theta
    if factor <= 0.0:
        if cfg.violation_policy == "abort":
            raise WealthViolationError(t, factor)
        flagged = True
        w = 0.0
    else:
        w = wealth_step(state.wealth.wealth, g, bettor.theta)
    declared = w >= cfg.threshold
    if not declared:
        if factor > 0.0:
            bettor = ons_update(bettor, g, next_interval)
        else:
            bettor = reclamp(bettor, next_interval)
    violations = state.violations + (t,) if flagged else state.violations
    new = SimpleDetectorState(bettor, WealthState(w, t), declared, float(d_next), violations)
    return new, declared


def composite_step(state, score_x, score_y, d_next, cfg):
    """Composite counterpart of ``simple_step`` (two one-sided processes)."""
    if state.declared:
        raise InvalidInputError("detector has already declared")
    if cfg.mode != "composite":
        raise ConfigurationError("composite_step needs a composite-mode config")
    eps = state.epsilon
    if not eps < d_next:
        raise ConfigurationError(f"epsilon={eps} must be < d_next={d_next}")
    next_interval = decision_interval(d_next, "composite")
    (bettor_a, wealth_a), (bettor_b, wealth_b) = state.side_a, state.side_b
    t = wealth_a.step + 1
    g = score_x - score_y
    g_a = g - eps
    g_b = -g - eps
    flagged = abs(g) > state.bound
    f_a = 1.0 - g_a * bettor_a.theta
    f_b = 1.0 - g_b * bettor_b.theta
    if cfg.violation_policy == "abort":
        if f_a <= 0.0:
            raise WealthViolationError(t, f_a)
        if f_b <= 0.0:
            raise WealthViolationError(t, f_b)
    w_a = wealth_step(wealth_a.wealth, g_a, bettor_a.theta) if f_a > 0.0 else 0.0
    w_b = wealth_step(wealth_b.wealth, g_b, bettor_b.theta) if f_b > 0.0 else 0.0
    flagged = flagged or f_a <= 0.0 or f_b <= 0.0
    declared = w_a >= cfg.threshold or w_b >= cfg.threshold
    if not declared:
        bettor_a = ons_update(bettor_a, g_a, next_interval) if f_a > 0.0 else reclamp(bettor_a, next_interval)
        bettor_b = ons_update(bettor_b, g_b, next_interval) if f_b > 0.0 else reclamp(bettor_b, next_interval)
    violations = state.violations + (t,) if flagged else state.violations
    new = CompositeDetectorState(
        (bettor_a, WealthState(w_a, t)),
        (bettor_b, WealthState(w_b, t)),
        eps,
        declared,
        float(d_next),
        violations,
    )
    return new, declared


def _budget_declares(mode, wealths, z, alpha):
    if mode == "composite":
        return any(w >= 2.0 * z / alpha for w in wealths)
    return wealths[0] >= z / alpha


def finalize(state, T, z, cfg):
    """Randomized-Ville check at the time budget ``T``.

    Simple: declare iff ``W_T >= z/alpha``.  Composite: declare iff either
    side has ``W_T >= 2z/alpha`` (one shared ``z``).
    """
    if not (0.0 <= z <= 1.0):
        raise InvalidInputError(f"z must lie in [0, 1], got {z!r}")
    if isinstance(state, SimpleDetectorState):
        if state.wealth.step != T:
            raise InvalidInputError(f"finalize at T={T} but detector is at t={state.wealth.step}")
        wealths = (state.wealth.wealth,)
    else:
        if state.side_a[1].step != T:
            raise InvalidInputError(f"finalize at T={T} but detector is at t={state.side_a[1].step}")
        wealths = (state.side_a[1].wealth, state.side_b[1].wealth)
    if state.declared:
        return DECLARED_ANYTIME
    return DECLARED_AT_BUDGET if _budget_declares(cfg.mode, wealths, z, cfg.alpha) else RETAINED


def _array_or_none(values, dtype=float):
    return None if values is None else np.asarray(values, dtype=dtype)


@dataclass
class TestOutcome:
    """Result of one sequential run.

    ``steps`` holds the absolute time index of every betting step taken;
    ``wealth``/``theta`` belong to the simple process or to side A, and
    ``wealth_b``/``theta_b`` to side B in composite mode.
    """

    __test__ = False  # not a pytest class

    decision: str
    rejection_time: int
    time_budget: Optional[int]
    mode: str
    alpha: float
    epsilon: float = 0.0
    gamma: float = DEFAULT_GAMMA
    steps: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    g: np.ndarray = field(default_factory=lambda: np.zeros(0))
    d: np.ndarray = field(default_factory=lambda: np.zeros(0))
    wealth: Optional[np.ndarray] = None
    theta: Optional[np.ndarray] = None
    wealth_b: Optional[np.ndarray] = None
    theta_b: Optional[np.ndarray] = None
    violations: tuple = ()
    z: Optional[float] = None
    batches: tuple = ()

    @property
    def declared(self):
        return self.decision != RETAINED

    @property
    def wealth_trajectory(self):
        if self.wealth is None:
            return []
        if self.wealth_b is None:
            return [(int(t), float(w)) for t, w in zip(self.steps, self.wealth)]
        return [
            (int(t), float(wa), float(wb)) for t, wa, wb in zip(self.steps, self.wealth, self.wealth_b)
        ]

    def betting_trace(self, side="A"):
        """Outcomes, plays and intervals of one bettor, for regret auditing."""
        d = np.asarray(self.d, dtype=float)
        half = 1.0 / (2.0 * d)
        if self.mode == "simple":
            return BettingTrace(np.asarray(self.g, float), np.asarray(self.theta, float), -half, half)
        if self.mode != "composite":
            raise InvalidInputError(f"no betting trace for mode {self.mode!r}")
        if side == "A":
            g_eff, theta = np.asarray(self.g) - self.epsilon, self.theta
        elif side == "B":
            g_eff, theta = -np.asarray(self.g) - self.epsilon, self.theta_b
        else:
            raise InvalidInputError(f"side must be 'A' or 'B', got {side!r}")
        return BettingTrace(np.asarray(g_eff, float), np.asarray(theta, float), -half, np.zeros_like(half))

    def to_dict(self):
        def lst(a):
            return None if a is None else np.asarray(a).tolist()

        return {
            "decision": self.decision,
            "rejection_time": int(self.rejection_time),
            "time_budget": self.time_budget,
            "mode": self.mode,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "steps": lst(self.steps),
            "g": lst(self.g),
            "d": lst(self.d),
            "wealth": lst(self.wealth),
            "theta": lst(self.theta),
            "wealth_b": lst(self.wealth_b),
            "theta_b": lst(self.theta_b),
            "violations": [int(v) for v in self.violations],
            "z": self.z,
            "batches": [dict(b) for b in self.batches],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            decision=data["decision"],
            rejection_time=data["rejection_time"],
            time_budget=data["time_budget"],
            mode=data["mode"],
            alpha=data["alpha"],
            epsilon=data.get("epsilon", 0.0),
            gamma=data.get("gamma", DEFAULT_GAMMA),
            steps=np.asarray(data.get("steps") or [], dtype=np.int64),
            g=np.asarray(data.get("g") or [], dtype=float),
            d=np.asarray(data.get("d") or [], dtype=float),
            wealth=_array_or_none(data.get("wealth")),
            theta=_array_or_none(data.get("theta")),
            wealth_b=_array_or_none(data.get("wealth_b")),
            theta_b=_array_or_none(data.get("theta_b")),
            violations=tuple(data.get("violations", ())),
            z=data.get("z"),
            batches=tuple(data.get("batches", ())),
        )


def _resolve_bounds(cfg, x, y, n_total):
    """Return ``(start, d)`` where ``d[i]`` bounds absolute step ``start + i + 1``.

    ``d`` has one trailing entry for the (never played) step after the
    last one.
    """
    policy = cfg.d_policy
    n_bet = n_total
    if policy.kind == "constant":
        return 0, np.full(n_bet + 1, policy.value)
    if policy.kind == "per_step":
        seq = np.asarray(policy.sequence, dtype=float)
        if len(seq) < n_total:
            raise InputDataError(f"per_step d sequence has {len(seq)} entries, need {n_total}")
        if len(seq) == n_total:
            seq = np.append(seq, seq[-1])
        return 0, seq[: n_total + 1]
    p = policy.prefix
    if n_total < p:
        raise InputDataError(f"stream has {n_total} observations, prefix estimation needs {p}")
    d_est = estimate_d(x[:p], y[:p], n=p)
    if cfg.mode == "composite" and not cfg.epsilon < d_est:
        raise ConfigurationError(f"epsilon={cfg.epsilon} must be < estimated d={d_est}")
    return p, np.full(n_total - p + 1, d_est)


def run_detector(cfg, stream, backend=None):
    """Run the configured detector over ``stream`` and return a ``TestOutcome``.

    The run stops at the first anytime declaration.  With a finite time
    budget ``T`` an undeclared run gets the randomized-Ville check at
    ``T`` using ``z`` from the ``seed``'s finalization substream; with
    ``time_budget=None`` the stream is consumed to its end and no final
    check is made.
    """
    stream = as_stream(stream)
    x, y = stream.x, stream.y
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("stream contains non-finite scores")
    T = cfg.time_budget
    if T is not None:
        if len(stream) < T:
            raise InputDataError(f"stream has {len(stream)} observations, time budget needs {T}")
        n_total = T
    else:
        n_total = len(stream)
    start, d = _resolve_bounds(cfg, x, y, n_total)
    g = np.ascontiguousarray(x[start:n_total] - y[start:n_total], dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    k = kernels.get_backend(backend)
    abort = cfg.violation_policy == "abort"
    if cfg.mode == "simple":
        wealth, theta, flags, n, declared, abort_at = k.run_simple(g, d, cfg.gamma, cfg.threshold, abort)
        wealth_b = theta_b = None
        final = (float(wealth[-1]),) if n else (1.0,)
    else:
        wealth, wealth_b, theta, theta_b, flags, n, declared, abort_at = k.run_composite(
            g, d, cfg.epsilon, cfg.gamma, cfg.threshold, abort
        )
        final = (float(wealth[-1]), float(wealth_b[-1])) if n else (1.0, 1.0)
    if abort_at >= 0:
        raise WealthViolationError(start + abort_at + 1, None)
    steps = np.arange(start + 1, start + n + 1, dtype=np.int64)
    violations = tuple(int(t) for t in steps[np.asarray(flags) != 0])
    z = None
    if declared:
        decision, tau = DECLARED_ANYTIME, start + n
    elif T is not None:
        z = float(substream(cfg.seed, STREAM_FINALIZE).random())
        decision = DECLARED_AT_BUDGET if _budget_declares(cfg.mode, final, z, cfg.alpha) else RETAINED
        tau = T
    else:
        decision, tau = RETAINED, n_total
    return TestOutcome(
        decision=decision,
        rejection_time=int(tau),
        time_budget=T,
        mode=cfg.mode,
        alpha=cfg.alpha,
        epsilon=cfg.epsilon,
        gamma=cfg.gamma,
        steps=steps,
        g=g[:n].copy(),
        d=d[:n].copy(),
        wealth=wealth,
        theta=theta,
        wealth_b=wealth_b,
        theta_b=theta_b,
        violations=violations,
        z=z,
    )


def run_steps(cfg, stream):
    """Reference run through the ``*_step`` state machines (slow, for checks)."""
    stream = as_stream(stream)
    x, y = stream.x, stream.y
    T = cfg.time_budget if cfg.time_budget is not None else len(stream)
    start, d = _resolve_bounds(cfg, x, y, T)
    state = initial_state(cfg, float(d[0]), start_step=start)
    step = simple_step if cfg.mode == "simple" else composite_step
    states = []
    for i in range(T - start):
        state, declared = step(state, float(x[start + i]), float(y[start + i]), float(d[i + 1]), cfg)
        states.append(state)
        if declared:
            break
    return states
