"""Analytic control laws: decaying-rate schedules, uniform control,
excitation control for identification, and conservatively capped
exploitation control."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AtTarget, InvalidRange

TARGET_GAP_TOL = 1e-12  # below this |x_j - d| excitation control is undefined


@dataclass(frozen=True)
class RateSchedule:
    """Decaying contraction-rate target r(t) = a * b^t, 0 < a, b < 1."""

    a: float
    b: float

    def __post_init__(self):
        if not 0.0 < self.a < 1.0 or not 0.0 < self.b < 1.0:
            raise InvalidRange(f"need 0 < a, b < 1, got a={self.a}, b={self.b}")

    def rate(self, t: int | float) -> float:
        return self.a * self.b**t


@dataclass(frozen=True, eq=False)
class ThetaCap:
    """Conservative per-agent susceptibility upper bounds theta_max_j."""

    theta_max: np.ndarray

    def __post_init__(self):
        tm = np.asarray(self.theta_max, dtype=float)
        if (tm <= 0).any():
            raise InvalidRange("theta_max must be strictly positive")
        tm.setflags(write=False)
        object.__setattr__(self, "theta_max", tm)

    @property
    def u_max(self) -> float:
        """min_j 1/theta_max_j, the largest control safe for every agent."""
        return float(1.0 / self.theta_max.max())


def exponential_control(schedule: RateSchedule, t: int, h: np.ndarray) -> np.ndarray:
    """u_i = r(t) / h_i, realizing the uniform contraction rate r(t)."""
    h = np.asarray(h, dtype=float)
    if (h <= 0).any():
        raise InvalidRange("susceptibilities must be positive")
    return schedule.rate(t) / h


def uniform_control(r: float, h_max: float) -> float:
    """Single shared control u_c = r / h_max; every h_i*u_c lands in
    [r*h_min/h_max, r] subset of (0, 1)."""
    if not 0.0 < r < 1.0:
        raise InvalidRange("rate must lie in (0, 1)")
    if not h_max > 0.0:
        raise InvalidRange("h_max must be positive")
    return r / h_max


def pe_control(
    x: np.ndarray,
    d: float,
    alpha: float,
    lambda_V: float,
    cap: ThetaCap,
) -> np.ndarray:
    """Excitation control u_j = min(alpha / (lambda_V * |x_j - d|), 1/theta_max_j).

    Unclipped components put the regressor weight |y_j| exactly at
    alpha/lambda_V, which secures the persistent-excitation level alpha.
    """
    if alpha < 0.0:
        raise InvalidRange("excitation level must be nonnegative")
    if not lambda_V > 0.0:
        raise InvalidRange("lambda_V must be positive")
    gap = np.abs(np.asarray(x, dtype=float) - d)
    if (gap < TARGET_GAP_TOL).any():
        raise AtTarget("some |x_j - d| < 1e-12; excitation impossible at the target")
    return np.minimum(alpha / (lambda_V * gap), 1.0 / cap.theta_max)


def exploitation_control(r_t: float, cap: ThetaCap) -> np.ndarray:
    """u_j = r_t / theta_max_j; admissible under parameter error because
    theta_max_j >= theta_j makes the true contraction at most r_t."""
    if not 0.0 < r_t < 1.0:
        raise InvalidRange("rate must lie in (0, 1)")
    return r_t / cap.theta_max


def schedule_policy(schedule: RateSchedule, h: np.ndarray):
    """simulate() policy applying exponential_control at each step."""
    h = np.asarray(h, dtype=float)

    def policy(s: int, x: np.ndarray) -> np.ndarray:
        return schedule.rate(s) / h

    return policy


def constant_policy(u: np.ndarray):
    """simulate() policy holding a fixed control."""
    u = np.asarray(u, dtype=float)

    def policy(s: int, x: np.ndarray) -> np.ndarray:
        return u

    return policy


def zero_policy(n: int):
    """simulate() policy applying no control (pure consensus)."""
    u = np.zeros(n)

    def policy(s: int, x: np.ndarray) -> np.ndarray:
        return u

    return policy
