"""Controlled opinion dynamics: stepping, trajectory recording, cost accounting.

One step blends each opinion toward the target d with weight h_i*u_i and
propagates the blend through the mixing matrix. Admissible controls
(h_i*u_i in [0, 1]) keep states in [0, 1]^n; the step asserts both.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .errors import InadmissibleControl, StateOutOfBox, ZeroControl
from .network import AgentParams, Network

BOX_TOL = 1e-12     # float-noise tolerance on the [0,1] state box
ADMIT_TOL = 1e-12   # tolerance on the h*u in [0,1] admissibility check

Controller = Callable[[int, np.ndarray], np.ndarray]


def _check_box(x: np.ndarray, what: str) -> np.ndarray:
    if x.min() < -BOX_TOL or x.max() > 1.0 + BOX_TOL:
        raise StateOutOfBox(
            f"{what} leaves [0,1]^n beyond {BOX_TOL:.0e} "
            f"(range [{x.min():.6e}, {x.max():.6e}])"
        )
    return np.clip(x, 0.0, 1.0)


def _check_admissible(u: np.ndarray, h: np.ndarray) -> np.ndarray:
    if (u < 0).any():
        raise InadmissibleControl("control must be nonnegative")
    hu = h * u
    if hu.max(initial=0.0) > 1.0 + ADMIT_TOL:
        raise InadmissibleControl(
            f"h_i*u_i = {hu.max():.6e} exceeds 1; controller bug"
        )
    return hu


def step(x: np.ndarray, u: np.ndarray, net: Network, d: float) -> np.ndarray:
    """Advance one step: V @ ((1 - h*u) * x + (h*u) * d).

    Validates admissibility against the acting network's true h and asserts
    the output stays in [0, 1]^n (clamped within BOX_TOL, error beyond).
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if not 0.0 <= d <= 1.0:
        raise ValueError("target d must lie in [0, 1]")
    _check_box(x, "input state")
    hu = _check_admissible(u, net.params.h)
    x_next = _kernels.mix_step(net.mixing.V, hu, x, d)
    return _check_box(x_next, "stepped state")


def contraction_factor(u: np.ndarray, params: AgentParams) -> float:
    """Per-step infinity-norm error shrink rate eta = min_i h_i*u_i.

    The control must be strictly positive and admissible; eta in (0, 1]
    and one step satisfies |x' - d|_inf <= (1 - eta)|x - d|_inf.
    """
    u = np.asarray(u, dtype=float)
    hu = _check_admissible(u, params.h)
    eta = float(hu.min())
    if eta <= 0.0:
        raise ZeroControl("contraction requires h_i*u_i > 0 for every agent")
    return eta


@dataclass(eq=False)
class Trajectory:
    """Recorded run: states (k+1, n) with row 0 = x0, controls (k, n) where
    controls[s] produced states[s+1], and the scalar target."""

    states: np.ndarray
    controls: np.ndarray
    target: float
    halted_by_budget: bool = False
    notes: dict = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return self.states.shape[1]

    @property
    def n_steps(self) -> int:
        return self.controls.shape[0]

    @property
    def step_costs(self) -> np.ndarray:
        return self.controls.sum(axis=1)

    @property
    def cum_costs(self) -> np.ndarray:
        return np.cumsum(self.step_costs)

    @property
    def total_cost(self) -> float:
        costs = self.cum_costs
        return float(costs[-1]) if costs.size else 0.0

    @property
    def err_inf(self) -> np.ndarray:
        return np.abs(self.states - self.target).max(axis=1)

    @property
    def final_error(self) -> float:
        return float(self.err_inf[-1])

    def to_csv(self, path) -> None:
        """Columns: t, x_1..x_n, u_1..u_n, step_cost, cum_cost, err_inf.
        Row 0 carries x0 with zero control columns. 17 significant digits."""
        n = self.n_agents
        header = (
            ["t"]
            + [f"x_{i + 1}" for i in range(n)]
            + [f"u_{i + 1}" for i in range(n)]
            + ["step_cost", "cum_cost", "err_inf"]
        )
        costs = self.step_costs
        cums = self.cum_costs
        errs = self.err_inf
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for t in range(self.states.shape[0]):
                if t == 0:
                    u_cols = [0.0] * n
                    c, cc = 0.0, 0.0
                else:
                    u_cols = list(self.controls[t - 1])
                    c, cc = float(costs[t - 1]), float(cums[t - 1])
                row = [t, *self.states[t], *u_cols, c, cc, float(errs[t])]
                fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def simulate(
    net: Network,
    x0: np.ndarray,
    d: float,
    controller: Controller,
    T: int,
    budget: float | None = None,
) -> Trajectory:
    """Run the dynamics for up to T steps under a per-step control policy.

    controller(s, x) returns the control applied at step s (0-based), which
    produces states[s+1]. A step whose cost would push cumulative spend past
    the budget is rejected and the run halts there, so cost never exceeds it.
    """
    x = _check_box(np.asarray(x0, dtype=float).copy(), "initial state")
    n = x.shape[0]
    states = [x.copy()]
    controls: list[np.ndarray] = []
    cum = 0.0
    halted = False
    for s in range(T):
        u = np.asarray(controller(s, x), dtype=float)
        if u.ndim == 0:
            u = np.full(n, float(u))
        c = float(u.sum())
        if budget is not None and cum + c > budget:
            halted = True
            break
        x = step(x, u, net, d)
        cum += c
        states.append(x.copy())
        controls.append(u.copy())
    return Trajectory(
        states=np.asarray(states),
        controls=np.asarray(controls).reshape(len(controls), n),
        target=float(d),
        halted_by_budget=halted,
    )


def simulate_schedule(
    net: Network,
    x0: np.ndarray,
    d: float,
    schedule,
    T: int,
    budget: float | None = None,
) -> Trajectory:
    """Fast path for the decaying-rate controller u_i = a*b^s / h_i.

    Equivalent to simulate() with the matching policy; runs the whole
    trajectory inside one kernel call.
    """
    x0 = _check_box(np.asarray(x0, dtype=float).copy(), "initial state")
    if not 0.0 <= d <= 1.0:
        raise ValueError("target d must lie in [0, 1]")
    cap = np.inf if budget is None else float(budget)
    states, controls = _kernels.schedule_rollout(
        net.mixing.V, net.params.h, x0, float(d), schedule.a, schedule.b, int(T), cap
    )
    halted = budget is not None and controls.shape[0] < T
    return Trajectory(
        states=states, controls=controls, target=float(d), halted_by_budget=halted
    )
