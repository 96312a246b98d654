"""Comparison controllers for the benchmark experiments.

run_gradient_baseline mimics an online-feedback-optimization recommender:
pick the control by projected gradient descent on the one-step loss
0.5 * |x(t) - d|^2, hold it until the error stops improving, repeat until
the budget runs out, then coast without control to the horizon.

run_budget_optimal_baseline optimizes the whole control sequence under the
hard budget by projected gradient descent, seeded with the feasible
decaying-rate schedule so the result can only improve on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, dynamics
from .errors import InvalidRange
from .network import Network

MAX_HALVINGS = 30
U_CAP_SLACK = 1e-12  # keep h_i * u_i strictly below 1


@dataclass
class GradientControllerConfig:
    """Tuning for the interval-held projected-gradient controller."""

    step_size: float = 0.5
    interval_tol: float = 1e-4
    max_inner_iters: int = 10
    horizon: int = 1000
    c_max: float = float("inf")
    h_believed: np.ndarray | None = None  # None: believes the true h

    def __post_init__(self):
        if not self.step_size > 0:
            raise InvalidRange("step_size must be positive")
        if not self.interval_tol > 0:
            raise InvalidRange("interval_tol must be positive")
        if self.max_inner_iters < 1 or self.horizon < 1:
            raise InvalidRange("max_inner_iters and horizon must be at least 1")
        if self.c_max < 0:
            raise InvalidRange("c_max must be nonnegative")


def one_step_loss(x: np.ndarray, u: np.ndarray, h: np.ndarray, V: np.ndarray, d: float) -> float:
    """0.5 * |x(t) - d|_2^2 after one step from x under control u."""
    x1 = _kernels.mix_step(V, h * u, x, d)
    gap = x1 - d
    return 0.5 * float(gap @ gap)


def one_step_loss_gradient(
    x: np.ndarray, u: np.ndarray, h: np.ndarray, V: np.ndarray, d: float
) -> np.ndarray:
    """Exact gradient of the one-step loss w.r.t. u:
    grad_j = h_j (d - x_j) * (V^T (x(t) - d))_j."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    h = np.asarray(h, dtype=float)
    x1 = _kernels.mix_step(V, h * u, x, d)
    return h * (d - x) * (V.T @ (x1 - d))


def descend_one_step(
    x: np.ndarray,
    u: np.ndarray,
    h: np.ndarray,
    V: np.ndarray,
    d: float,
    box: np.ndarray,
    config: GradientControllerConfig,
) -> np.ndarray:
    """Projected gradient descent on the one-step loss; never increases it."""
    u = np.clip(u, 0.0, box)
    for _ in range(config.max_inner_iters):
        g = one_step_loss_gradient(x, u, h, V, d)
        base = one_step_loss(x, u, h, V, d)
        s = config.step_size
        cand = u
        for _ in range(MAX_HALVINGS + 1):
            trial = np.clip(u - s * g, 0.0, box)
            if one_step_loss(x, trial, h, V, d) <= base:
                cand = trial
                break
            s *= 0.5
        if np.abs(cand - u).max(initial=0.0) < 1e-14:
            return cand
        u = cand
    return u


def run_gradient_baseline(
    net: Network, x0: np.ndarray, d: float, config: GradientControllerConfig
) -> dynamics.Trajectory:
    """Interval-and-hold projected-gradient control under a hard budget.

    A step whose cost would exceed the budget is not applied; from there the
    run coasts without control to the horizon. Controls are projected onto
    [0, 1/h_believed_j] so they stay admissible under the believed parameters.
    """
    h_b = net.params.h if config.h_believed is None else np.asarray(config.h_believed, dtype=float)
    if (h_b <= 0).any():
        raise InvalidRange("believed susceptibilities must be positive")
    V = net.mixing.V
    box = (1.0 - U_CAP_SLACK) / h_b
    n = net.n

    x = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0).copy()
    states = [x.copy()]
    controls: list[np.ndarray] = []
    cum = 0.0
    exhausted = False
    u = np.zeros(n)
    intervals = 0

    while len(controls) < config.horizon and not exhausted:
        u = descend_one_step(x, u, h_b, V, d, box, config)
        intervals += 1
        prev_err = float(np.abs(x - d).max())
        while len(controls) < config.horizon:
            c = float(u.sum())
            if cum + c > config.c_max:
                exhausted = True
                break
            x = dynamics.step(x, u, net, d)
            cum += c
            states.append(x.copy())
            controls.append(u.copy())
            err = float(np.abs(x - d).max())
            if prev_err - err < config.interval_tol:
                break
            prev_err = err

    zero = np.zeros(n)
    while len(controls) < config.horizon:
        x = dynamics.step(x, zero, net, d)
        states.append(x.copy())
        controls.append(zero)

    return dynamics.Trajectory(
        states=np.asarray(states),
        controls=np.asarray(controls).reshape(len(controls), n),
        target=float(d),
        halted_by_budget=exhausted,
        notes={"budget_exhausted": exhausted, "intervals": intervals},
    )


def project_budget_box(u: np.ndarray, c_max: float, cap: np.ndarray) -> np.ndarray:
    """Project onto {0 <= u <= cap (per column), sum(u) <= c_max} by clamping
    to the box and, if the total still exceeds the budget, shifting by the
    bisected threshold tau with u <- clip(u - tau, 0, cap)."""
    cap_full = np.broadcast_to(cap, u.shape)
    v = np.clip(u, 0.0, cap_full)
    total = v.sum()
    if total <= c_max:
        return v
    lo, hi = 0.0, float(np.max(u))
    for _ in range(200):
        tau = 0.5 * (lo + hi)
        total = np.clip(u - tau, 0.0, cap_full).sum()
        if total > c_max:
            lo = tau
        else:
            hi = tau
        if hi - lo < 1e-14 * max(1.0, hi):
            break
    return np.clip(u - hi, 0.0, cap_full)


def _rollout(V, h, x0, d, U):
    """States under the control sequence U (T, n); returns (T+1, n) array."""
    x = x0.copy()
    states = np.empty((U.shape[0] + 1, x0.shape[0]))
    states[0] = x
    for s in range(U.shape[0]):
        x = _kernels.mix_step(V, h * U[s], x, d)
        np.clip(x, 0.0, 1.0, out=x)
        states[s + 1] = x
    return states


def _sequence_loss_grad(V, h, x0, d, U):
    """Terminal loss 0.5|x(T)-d|^2 and its gradient w.r.t. the sequence U,
    by backward propagation through the rollout."""
    states = _rollout(V, h, x0, d, U)
    gap = states[-1] - d
    loss = 0.5 * float(gap @ gap)
    grad = np.empty_like(U)
    lam = gap
    for s in range(U.shape[0] - 1, -1, -1):
        w = V.T @ lam
        grad[s] = h * (d - states[s]) * w
        lam = (1.0 - h * U[s]) * w
    return loss, grad


def run_budget_optimal_baseline(
    net: Network,
    x0: np.ndarray,
    d: float,
    T: int,
    c_max: float,
    max_iters: int = 200,
    improve_tol: float = 1e-12,
) -> dynamics.Trajectory:
    """Optimize the whole control sequence {u(t)} for the terminal error
    under the budget, by projected gradient descent with backtracking.

    Seeded with a budget-feasible decaying-rate schedule, so the returned
    loss never exceeds the analytic schedule's. notes carries convergence
    info; non-convergence returns the best iterate, flagged."""
    if T < 1 or not c_max >= 0:
        raise InvalidRange("need T >= 1 and c_max >= 0")
    h = net.params.h
    V = net.mixing.V
    x0 = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0)
    cap = (1.0 - U_CAP_SLACK) / h

    b0 = 0.9
    s_weight = float((1.0 / h).sum())
    unit = (1.0 - b0**T) / (1.0 - b0)
    a0 = min(0.95, 0.999 * c_max / (unit * s_weight)) if c_max > 0 else 0.0
    U = a0 * b0 ** np.arange(T)[:, None] / h[None, :]
    U = project_budget_box(U, c_max, cap)

    loss, grad = _sequence_loss_grad(V, h, x0, d, U)
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        s = 0.5
        improved = False
        for _ in range(MAX_HALVINGS + 1):
            trial = project_budget_box(U - s * grad, c_max, cap)
            trial_loss, trial_grad = _sequence_loss_grad(V, h, x0, d, trial)
            if trial_loss < loss:
                improved = True
                break
            s *= 0.5
        if not improved:
            converged = True  # no descent direction left at this resolution
            break
        gain = loss - trial_loss
        U, loss, grad = trial, trial_loss, trial_grad
        if gain < improve_tol:
            converged = True
            break

    states = _rollout(V, h, x0, d, U)
    return dynamics.Trajectory(
        states=states,
        controls=U,
        target=float(d),
        notes={
            "converged": converged,
            "iterations": iterations,
            "final_loss": loss,
            "seed_a": a0,
            "seed_b": b0,
        },
    )
