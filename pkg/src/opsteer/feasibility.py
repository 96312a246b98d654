"""Feasibility of reaching eps-accuracy within a horizon and budget.

Both the error bound exp(-a(1-b^T)/(1-b)) * |x'(0)|_inf and the control
cost a(1-b^T)/(1-b) * S hinge on the same bilinear term, so feasibility
reduces to sandwiching that term between log(|x'(0)|_inf / eps) and
C_max / S. solve_schedule searches b on a geometric grid and returns a
minimum-cost certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import RateSchedule
from .errors import InvalidRange, NumericFailure

B_GRID_POINTS = 64
B_LO = 1e-4
B_HI = 1.0 - 1e-4
A_FLOOR = 1e-12
A_CEIL = 1.0 - 1e-12
BISECT_TOL = 1e-10
MAX_BISECT = 200
B_LIMIT_TOL = 1e-12  # below this 1-b the geometric sum is taken at its limit


def unit_weight(b: float, T) -> float:
    """(1 - b^T) / (1 - b); T may be None or inf for the t -> inf limit."""
    if T is None or (isinstance(T, float) and math.isinf(T)):
        return 1.0 / (1.0 - b)
    if T < 0:
        raise InvalidRange("horizon must be nonnegative")
    if 1.0 - b < B_LIMIT_TOL:
        return float(T)
    return -math.expm1(T * math.log(b)) / (1.0 - b)


def geometric_weight(schedule: RateSchedule, T) -> float:
    """The shared bilinear term a(1 - b^T)/(1 - b)."""
    return schedule.a * unit_weight(schedule.b, T)


def error_bound(schedule: RateSchedule, T, x0_err: float) -> float:
    """Guaranteed distance to the target after T steps of the schedule:
    exp(-a(1-b^T)/(1-b)) * x0_err."""
    return math.exp(-geometric_weight(schedule, T)) * x0_err


def cost_of_schedule(schedule: RateSchedule, T, s_weight: float) -> float:
    """Cumulative control cost a(1-b^T)/(1-b) * S over the horizon; equals
    the simulated cumulative spend of the matching controller."""
    return geometric_weight(schedule, T) * s_weight


def cost_weight(h: np.ndarray) -> float:
    """Per-rate cost S = sum_i 1/h_i for susceptibility-matched control."""
    h = np.asarray(h, dtype=float)
    if (h <= 0).any():
        raise InvalidRange("susceptibilities must be positive")
    return float((1.0 / h).sum())


def cost_weight_uniform(n: int, h_max: float) -> float:
    """Per-rate cost S = n / h_max when one shared control is used."""
    if n < 1 or not h_max > 0:
        raise InvalidRange("need n >= 1 and h_max > 0")
    return n / h_max


@dataclass(frozen=True)
class FeasibilityProblem:
    """Reach |x(T) - d|_inf <= eps by horizon T spending at most c_max,
    with cost weight s_weight and initial error x0_err."""

    T: int
    eps: float
    x0_err: float
    c_max: float
    s_weight: float

    def __post_init__(self):
        if self.T < 1:
            raise InvalidRange("horizon must be at least 1")
        if not self.eps > 0:
            raise InvalidRange("eps must be positive")
        if not 0.0 < self.x0_err <= 1.0:
            raise InvalidRange("x0_err must lie in (0, 1]")
        if not self.c_max > 0 or not self.s_weight > 0:
            raise InvalidRange("c_max and s_weight must be positive")

    @property
    def accuracy_bound(self) -> float:
        """log(x0_err / eps); the bilinear term must be at least this."""
        return math.log(self.x0_err / self.eps)

    @property
    def budget_bound(self) -> float:
        """c_max / S; the bilinear term must be at most this."""
        return self.c_max / self.s_weight


@dataclass(frozen=True)
class FeasibilityResult:
    """Verdict plus the certificate values of the two-sided constraint
    budget_bound >= bilinear >= accuracy_bound evaluated at (a, b)."""

    feasible: bool
    schedule: RateSchedule | None
    bilinear: float | None
    budget_bound: float
    accuracy_bound: float
    failed_condition: str | None = None

    def __post_init__(self):
        if self.feasible:
            ok = (
                self.budget_bound >= self.bilinear - 1e-9 * max(1.0, abs(self.bilinear))
                and self.bilinear >= self.accuracy_bound - 1e-9 * max(1.0, abs(self.accuracy_bound))
            )
            if not ok:
                raise NumericFailure("feasible result fails its own certificate")


def check_condition1(problem: FeasibilityProblem) -> bool:
    """eps >= x0_err * exp(-c_max / S): the budget admits the accuracy at all."""
    return problem.eps >= problem.x0_err * math.exp(-problem.budget_bound)


def budget_matched_schedule(net, x0, d: float, T: int, c_max: float, b_grid=None):
    """Pick the budget-exhausting schedule with the best simulated error.

    Every full-spend (a, b) shares the closed-form guarantee
    exp(-c_max / S) * x0_err, so the planner discriminates within the family
    by rolling each candidate out on the model it already knows. Returns
    (schedule, trajectory)."""
    from . import dynamics  # local import keeps the module hierarchy flat

    if b_grid is None:
        b_grid = np.geomspace(0.02, 0.99, 24)
    s_weight = cost_weight(net.params.h)
    best = None
    for b in b_grid:
        b = float(b)
        a = min(0.95, 0.999 * c_max / (unit_weight(b, T) * s_weight))
        if not 0.0 < a < 1.0:
            continue
        schedule = RateSchedule(a=a, b=b)
        traj = dynamics.simulate_schedule(net, x0, d, schedule, T, budget=c_max)
        if best is None or traj.final_error < best[1].final_error:
            best = (schedule, traj)
    if best is None:
        raise NumericFailure("no admissible schedule on the b grid")
    return best


def _candidate(problem: FeasibilityProblem, b: float) -> tuple[float, float] | None:
    """Min-cost admissible a for this b, or None when no a in (0, 1) fits.
    Returns (cost_term a*w, a)."""
    w = unit_weight(b, problem.T)
    a_hi = min(problem.budget_bound / w, A_CEIL)
    a_lo = problem.accuracy_bound / w
    # shave the accuracy-binding end so rounding cannot flip the certificate
    a = max(A_FLOOR, a_lo * (1.0 - 1e-12) if a_lo > 0 else A_FLOOR)
    if a > a_hi:
        return None
    return a * w, a


def solve_schedule(problem: FeasibilityProblem) -> FeasibilityResult:
    """Search for (a, b) certifying both constraints; minimum-cost certificate.

    Condition 1 is checked first; then b runs over a geometric grid, taking
    for each b the cheapest admissible a. If every grid point fails only
    because a would need to reach 1, b is refined toward 1 by bisection on
    the boundary polynomial a(1-b^T) - log(x0_err/eps)(1-b) = 0 at a = 1.
    """
    base = dict(
        budget_bound=problem.budget_bound,
        accuracy_bound=problem.accuracy_bound,
    )
    if not check_condition1(problem):
        return FeasibilityResult(
            feasible=False, schedule=None, bilinear=None,
            failed_condition="condition1", **base,
        )

    best: tuple[float, float, float] | None = None  # (cost_term, a, b)
    for b in np.geomspace(B_LO, B_HI, B_GRID_POINTS):
        cand = _candidate(problem, float(b))
        if cand is not None and (best is None or cand[0] < best[0]):
            best = (cand[0], cand[1], float(b))

    if best is None:
        # Condition 1 holds, so the only obstruction is a >= 1; push b -> 1.
        if problem.accuracy_bound >= A_CEIL * problem.T:
            return FeasibilityResult(
                feasible=False, schedule=None, bilinear=None,
                failed_condition="condition2", **base,
            )
        b = _bisect_boundary(problem)
        cand = _candidate(problem, b)
        if cand is None:
            raise NumericFailure("bisection landed on an infeasible b")
        best = (cand[0], cand[1], b)

    _, a, b = best
    schedule = RateSchedule(a=a, b=b)
    return FeasibilityResult(
        feasible=True,
        schedule=schedule,
        bilinear=geometric_weight(schedule, problem.T),
        **base,
    )


def _bisect_boundary(problem: FeasibilityProblem) -> float:
    """Find b in (B_HI, 1) with accuracy_bound*(1-b)/(1-b^T) <= A_CEIL via
    bisection on f(b) = A_CEIL*(1-b^T) - accuracy_bound*(1-b)."""

    def f(b: float) -> float:
        return A_CEIL * -math.expm1(problem.T * math.log(b)) - problem.accuracy_bound * (1.0 - b)

    lo, hi = B_HI, 1.0 - 1e-15
    if f(lo) > 0:
        return lo
    if f(hi) < 0:
        raise NumericFailure("boundary polynomial does not bracket a root")
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < BISECT_TOL:
            break
    else:
        raise NumericFailure("bisection failed to converge in 200 iterations")
    return hi
