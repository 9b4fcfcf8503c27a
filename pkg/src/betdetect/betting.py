"""Scalar building blocks of the betting game.

The learner starts with wealth 1 and at every round stakes a fraction
``theta`` against the coin outcome ``g``; wealth is multiplied by
``1 - g * theta``.  ``theta`` is chosen by a one-dimensional Online Newton
Step on the log-loss ``-ln(1 - g * theta)`` and projected onto an interval
that keeps every wealth factor nonnegative.

All functions here are pure; the state objects are frozen dataclasses.
"""

import math
from dataclasses import dataclass, replace
from typing import Literal

from .errors import DomainError, InvalidBoundError, InvalidInputError

Mode = Literal["simple", "composite"]

#: Constant ONS parameter, 1/gamma = 2/(2 - ln 3).
DEFAULT_GAMMA = (2.0 - math.log(3.0)) / 2.0


def _check_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise InvalidInputError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class DecisionInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise InvalidInputError(f"empty interval [{self.lo}, {self.hi}]")

    def clamp(self, value):
        return max(min(value, self.hi), self.lo)

    def __contains__(self, value):
        return self.lo <= value <= self.hi

    @property
    def diameter(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class OnsBettorState:
    theta: float
    a: float
    gamma: float
    interval: DecisionInterval

    @classmethod
    def initial(cls, interval, gamma=DEFAULT_GAMMA):
        if not gamma > 0:
            raise InvalidInputError(f"gamma must be > 0, got {gamma!r}")
        return cls(theta=interval.clamp(0.0), a=1.0, gamma=gamma, interval=interval)


@dataclass(frozen=True)
class WealthState:
    wealth: float = 1.0
    step: int = 0


def wealth_step(w_prev, g, theta):
    """One round of the wealth recursion: ``w_prev * (1 - g * theta)``."""
    _check_finite(w_prev=w_prev, g=g, theta=theta)
    return w_prev * (1.0 - g * theta)


def log_loss(g, theta):
    _check_finite(g=g, theta=theta)
    factor = 1.0 - g * theta
    if factor <= 0.0:
        raise DomainError(f"1 - g*theta = {factor!r} <= 0 (g={g!r}, theta={theta!r})")
    return -math.log(factor)


def log_loss_gradient(g, theta):
    """Derivative of ``log_loss`` in ``theta``: ``g / (1 - g * theta)``."""
    _check_finite(g=g, theta=theta)
    factor = 1.0 - g * theta
    if factor <= 0.0:
        raise DomainError(f"1 - g*theta = {factor!r} <= 0 (g={g!r}, theta={theta!r})")
    return g / factor


def decision_interval(d, mode="simple"):
    """Betting interval for outcome bound ``d``.

    ``simple`` gives ``[-1/(2d), 1/(2d)]``; ``composite`` keeps only the
    nonpositive half ``[-1/(2d), 0]``.
    """
    if not (math.isfinite(d) and d > 0):
        raise InvalidBoundError(f"bound d must be finite and > 0, got {d!r}")
    half = 1.0 / (2.0 * d)
    if mode == "simple":
        return DecisionInterval(-half, half)
    if mode == "composite":
        return DecisionInterval(-half, 0.0)
    raise InvalidInputError(f"unknown mode {mode!r}")


def ons_update(state, g_effective, next_interval):
    """Online Newton Step on the log-loss, projected onto ``next_interval``.

    Curvature is accumulated before the step is taken:
    ``a' = a + z**2`` and ``theta' = clamp(theta - z / (gamma * a'))``.
    """
    z = log_loss_gradient(g_effective, state.theta)
    a = state.a + z * z
    theta = state.theta - z / (state.gamma * a)
    theta = max(min(theta, next_interval.hi), next_interval.lo)
    return replace(state, theta=theta, a=a, interval=next_interval)


def reclamp(state, next_interval):
    """Move to ``next_interval`` without a gradient step (used after a violation)."""
    theta = max(min(state.theta, next_interval.hi), next_interval.lo)
    return replace(state, theta=theta, interval=next_interval)


@dataclass(frozen=True)
class BettingTrace:
    """Per-step record of one bettor: outcome, play and the interval it was played in."""

    g: "np.ndarray"
    theta: "np.ndarray"
    lo: "np.ndarray"
    hi: "np.ndarray"

    def __len__(self):
        return len(self.g)
