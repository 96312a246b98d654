"""Two-phase online control with unknown susceptibilities.

Each cycle m explores while every |x_j - d| stays above the radius delta_m,
applying the excitation controller and updating the estimate, then
exploits with the capped analytic controller while every |x_j - d| stays
above gamma * delta_m. The cycle ends by shrinking the radius
(delta' = c_delta * gamma * delta) and rescaling the excitation level
(alpha' = lambda_V * u_max * delta'), which re-opens the exploration margin.
Once alpha falls to alpha_min exploration stops for good and the remaining
cycles contract the state toward the target under the frozen parameter cap.

The controller sees only the mixing matrix, the prior susceptibility range,
the target, and observed states; the true susceptibilities drive the plant
exclusively through dynamics.step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics
from .control import ThetaCap, exploitation_control, pe_control
from .errors import InvalidRange, StalledCycle
from .estimator import (
    EstimatorState,
    beta_bound,
    build_regressor,
    kappa,
    lyapunov_value,
    pe_margin,
    verify_pe,
)
from .network import Network

RATE_FLOOR = 1e-12   # exploitation rate below this moves nothing; end the phase
STALL_LIMIT = 25     # consecutive zero-step cycles before giving up


def combined_error(
    r_value: float, x: np.ndarray, d: float, nu_theta: float = 1.0, nu_x: float = 1.0
) -> float:
    """Joint progress metric nu_theta * R + nu_x * |x - d|_2^2."""
    if not nu_theta > 0 or not nu_x > 0:
        raise InvalidRange("weights must be positive")
    gap = np.asarray(x, dtype=float) - d
    return nu_theta * r_value + nu_x * float(gap @ gap)


def update_cycle_schedule(
    delta_m: float,
    gamma: float,
    c_delta: float,
    lambda_V: float,
    u_max_end: float,
) -> tuple[float, float]:
    """End-of-cycle update: delta' = c_delta * (gamma * delta_m) and
    alpha' = lambda_V * u_max_end * delta'. Shrinking below gamma * delta_m
    guarantees every component re-enters the exploration margin."""
    if not (delta_m > 0 and 0 < gamma < 1 and 0 < c_delta <= 0.5):
        raise InvalidRange("need delta_m > 0, gamma in (0,1), c_delta in (0, 1/2]")
    if not (lambda_V > 0 and u_max_end > 0):
        raise InvalidRange("lambda_V and u_max_end must be positive")
    delta_next = c_delta * (gamma * delta_m)
    alpha_next = lambda_V * u_max_end * delta_next
    return delta_next, alpha_next


@dataclass
class OnlineHyperparams:
    """Tuning for run_online; alpha0=None derives the excitation level from
    the initial margins so that delta_0 = 0.9 * min_j |x0_j - d|."""

    alpha0: float | None = None
    alpha_min: float = 1e-3
    gamma: float = 0.5
    c_delta: float = 0.5
    a: float = 0.5
    b: float = 0.9
    psi: float | None = None
    theta0: np.ndarray | None = None
    nu_theta: float = 1.0
    nu_x: float = 1.0
    tol: float = 1e-4
    max_cycles: int = 200
    budget: float | None = None
    max_total_steps: int | None = None
    max_phase_steps: int = 100_000

    def __post_init__(self):
        if self.alpha0 is not None and not self.alpha0 > 0:
            raise InvalidRange("alpha0 must be positive")
        if not self.alpha_min > 0:
            raise InvalidRange("alpha_min must be positive")
        if not 0 < self.gamma < 1:
            raise InvalidRange("gamma must lie in (0, 1)")
        if not 0 < self.c_delta <= 0.5:
            raise InvalidRange("c_delta must lie in (0, 1/2]")
        if not (0 < self.a < 1 and 0 < self.b < 1):
            raise InvalidRange("need 0 < a, b < 1")
        if not self.tol > 0:
            raise InvalidRange("tol must be positive")


@dataclass
class CycleRecord:
    """Per-cycle telemetry: r_value, err_inf and combined_error are
    snapshots at the cycle start; cum_cost is the spend through its end."""

    m: int
    delta: float
    alpha: float
    steps_explore: int
    steps_exploit: int
    r_value: float
    err_inf: float
    combined_error: float
    cum_cost: float
    explored: bool


@dataclass
class EstimatorTraceRow:
    """One estimator update: post-update estimate and diagnostics."""

    t: int
    theta_hat: np.ndarray
    pred_err_inf: float
    r_value: float
    pe_ok: bool
    kappa: float


@dataclass
class OnlineResult:
    cycles: list[CycleRecord]
    trajectory: dynamics.Trajectory
    estimator_trace: list[EstimatorTraceRow]
    theta_hat: np.ndarray
    theta_err_bound: float
    m_star: int | None
    r_min: float | None
    terminated: str  # converged | max_cycles | budget | max_steps
    final_err_inf: float
    final_combined_error: float
    alpha0: float = 0.0
    beta: float = 0.0
    psi: float = 0.0

    @property
    def total_cost(self) -> float:
        return self.trajectory.total_cost


def suggest_alpha0(
    lambda_V: float, u_max0: float, x0: np.ndarray, d: float, margin_frac: float = 0.9
) -> float:
    """Excitation level putting delta_0 at margin_frac of the smallest
    initial gap, so exploration can start."""
    min_gap = float(np.abs(np.asarray(x0, dtype=float) - d).min())
    return margin_frac * lambda_V * u_max0 * min_gap


def _initial_error_bound(theta0: np.ndarray, lo: float, hi: float) -> float:
    """Worst-case |theta - theta0|_2 over the prior box [lo, hi]^n."""
    worst = np.maximum(theta0 - lo, hi - theta0)
    return float(np.linalg.norm(np.maximum(worst, 0.0)))


def run_online(
    net: Network, x0: np.ndarray, d: float, hp: OnlineHyperparams | None = None
) -> OnlineResult:
    """Run the two-phase algorithm until |x - d|_inf <= tol or a limit hits.

    Raises StalledCycle when cycles stop advancing the state and the
    estimate entirely (mis-tuned gamma / c_delta) or a phase exceeds
    max_phase_steps.
    """
    hp = hp or OnlineHyperparams()
    V = net.mixing.V
    lam_V = net.mixing.lambda_V
    h_true = net.params.h  # plant only; the controller never reads this
    lo, hi = net.params.h_min, net.params.h_max

    theta0 = (
        np.full(net.n, 0.5 * (lo + hi))
        if hp.theta0 is None
        else np.asarray(hp.theta0, dtype=float).copy()
    )
    err_bound = _initial_error_bound(theta0, lo, hi)
    theta_max = theta0 + err_bound
    u_max = float(1.0 / theta_max.max())

    alpha = (
        suggest_alpha0(lam_V, u_max, x0, d) if hp.alpha0 is None else float(hp.alpha0)
    )
    if not alpha > 0:
        alpha = hp.alpha_min  # x0 touches the target somewhere; skip exploration
    alpha0 = alpha
    # beta bounds |F_t| for every excited step because the margin keeps the
    # excitation controller unclipped, where |y_j| = alpha_m / lambda_V exactly
    beta = beta_bound(V, alpha0 / lam_V)
    psi = 1.0 / beta**2 if hp.psi is None else float(hp.psi)
    est = EstimatorState(theta_hat=theta0, psi=psi, beta=beta, theta_ceil=hi)
    delta = pe_margin(alpha, lam_V, u_max)

    x = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0).copy()
    t = 0
    cum = 0.0
    states = [x.copy()]
    controls: list[np.ndarray] = []
    trace: list[EstimatorTraceRow] = []
    cycles: list[CycleRecord] = []
    m = 0
    m_star: int | None = None
    r_min: float | None = None
    zero_cycles = 0
    terminated: str | None = None

    def true_r() -> float:
        return lyapunov_value(h_true - est.theta_hat, psi)

    def out_of_steps() -> bool:
        return hp.max_total_steps is not None and t >= hp.max_total_steps

    while terminated is None:
        err_start = float(np.abs(x - d).max())
        r_start = true_r()
        comb_start = combined_error(r_start, x, d, hp.nu_theta, hp.nu_x)
        if err_start <= hp.tol:
            terminated = "converged"
            break
        if m >= hp.max_cycles:
            terminated = "max_cycles"
            break
        if out_of_steps():
            terminated = "max_steps"
            break
        if m_star is None and alpha <= hp.alpha_min:
            m_star = m
            r_min = r_start

        k_theta = 0
        k_x = 0
        explore = alpha > hp.alpha_min
        kappa_m = kappa(psi, beta, alpha) if explore else 0.0
        cap = ThetaCap(theta_max)

        while explore and terminated is None:
            if k_theta >= hp.max_phase_steps:
                raise StalledCycle(f"exploration exceeded {hp.max_phase_steps} steps")
            if not (np.abs(x - d) > delta).all():
                break
            u = pe_control(x, d, alpha, lam_V, cap)
            c = float(u.sum())
            if hp.budget is not None and cum + c > hp.budget:
                terminated = "budget"
                break
            if out_of_steps():
                terminated = "max_steps"
                break
            reg = build_regressor(x, u, d, V)
            x = dynamics.step(x, u, net, d)
            est.update(reg, x)
            err_bound *= math.sqrt(max(0.0, 1.0 - kappa_m))
            verdict = verify_pe(reg, alpha, lam_V)
            cum += c
            t += 1
            k_theta += 1
            states.append(x.copy())
            controls.append(u)
            trace.append(
                EstimatorTraceRow(
                    t=t,
                    theta_hat=est.theta_hat.copy(),
                    pred_err_inf=est.pred_errors[-1],
                    r_value=true_r(),
                    pe_ok=verdict.exact,
                    kappa=kappa_m,
                )
            )

        # refresh the conservative parameter cap after exploring
        theta_max = est.theta_hat + err_bound
        u_max = float(1.0 / theta_max.max())
        cap = ThetaCap(theta_max)

        s_phase = 0
        while terminated is None:
            if k_x >= hp.max_phase_steps:
                raise StalledCycle(f"exploitation exceeded {hp.max_phase_steps} steps")
            if not (np.abs(x - d) >= hp.gamma * delta).all():
                break
            rate = hp.a * hp.b**s_phase
            if rate < RATE_FLOOR:
                break  # schedule spent; the next cycle restarts it
            u = exploitation_control(rate, cap)
            c = float(u.sum())
            if hp.budget is not None and cum + c > hp.budget:
                terminated = "budget"
                break
            if out_of_steps():
                terminated = "max_steps"
                break
            x = dynamics.step(x, u, net, d)
            cum += c
            t += 1
            k_x += 1
            s_phase += 1
            states.append(x.copy())
            controls.append(u)

        cycles.append(
            CycleRecord(
                m=m,
                delta=delta,
                alpha=alpha,
                steps_explore=k_theta,
                steps_exploit=k_x,
                r_value=r_start,
                err_inf=err_start,
                combined_error=comb_start,
                cum_cost=cum,
                explored=k_theta > 0,
            )
        )
        if terminated is not None:
            break

        if k_theta == 0 and k_x == 0:
            zero_cycles += 1
            if zero_cycles >= STALL_LIMIT:
                raise StalledCycle(
                    f"{zero_cycles} consecutive cycles advanced neither the "
                    "state nor the estimate; gamma / c_delta mis-tuned"
                )
        else:
            zero_cycles = 0

        delta, alpha = update_cycle_schedule(delta, hp.gamma, hp.c_delta, lam_V, u_max)
        # fast learning can raise u_max enough that the scheduled excitation
        # level would exceed the one beta was designed for; cap it there
        alpha = min(alpha, alpha0)
        m += 1

    final_err = float(np.abs(x - d).max())
    final_r = true_r()
    traj = dynamics.Trajectory(
        states=np.asarray(states),
        controls=np.asarray(controls).reshape(len(controls), net.n),
        target=float(d),
        halted_by_budget=terminated == "budget",
    )
    return OnlineResult(
        cycles=cycles,
        trajectory=traj,
        estimator_trace=trace,
        theta_hat=est.theta_hat.copy(),
        theta_err_bound=err_bound,
        m_star=m_star,
        r_min=r_min,
        terminated=terminated,
        final_err_inf=final_err,
        final_combined_error=combined_error(final_r, x, d, hp.nu_theta, hp.nu_x),
        alpha0=alpha0,
        beta=beta,
        psi=psi,
    )


@dataclass
class EstimationRun:
    """Exploration-only identification session."""

    estimator: EstimatorState
    trace: list[EstimatorTraceRow]
    trajectory: dynamics.Trajectory
    alpha: float
    beta: float
    psi: float
    kappa: float
    delta: float
    r0: float


def run_estimation(
    net: Network,
    x0: np.ndarray,
    d: float,
    alpha: float,
    steps: int,
    psi: float | None = None,
    theta0: np.ndarray | None = None,
) -> EstimationRun:
    """Apply the excitation controller for up to `steps` steps while the
    margin |x_j - d| > delta holds, updating the estimate each step.

    Uses the worst-case prior cap for clipping, the a priori regressor
    bound beta, and psi = 1/beta^2 unless overridden."""
    if not alpha > 0:
        raise InvalidRange("alpha must be positive")
    V = net.mixing.V
    lam_V = net.mixing.lambda_V
    lo, hi = net.params.h_min, net.params.h_max
    theta0 = (
        np.full(net.n, 0.5 * (lo + hi))
        if theta0 is None
        else np.asarray(theta0, dtype=float).copy()
    )
    err_bound = _initial_error_bound(theta0, lo, hi)
    cap = ThetaCap(theta0 + err_bound)
    beta = beta_bound(V, alpha / lam_V)
    psi = 1.0 / beta**2 if psi is None else float(psi)
    est = EstimatorState(theta_hat=theta0, psi=psi, beta=beta, theta_ceil=hi)
    kappa_value = kappa(psi, beta, alpha)
    delta = pe_margin(alpha, lam_V, cap.u_max)
    r0 = lyapunov_value(net.params.h - est.theta_hat, psi)

    x = np.clip(np.asarray(x0, dtype=float), 0.0, 1.0).copy()
    states = [x.copy()]
    controls: list[np.ndarray] = []
    trace: list[EstimatorTraceRow] = []
    for t in range(1, steps + 1):
        if not (np.abs(x - d) > delta).all():
            break
        u = pe_control(x, d, alpha, lam_V, cap)
        reg = build_regressor(x, u, d, V)
        x = dynamics.step(x, u, net, d)
        est.update(reg, x)
        verdict = verify_pe(reg, alpha, lam_V)
        states.append(x.copy())
        controls.append(u)
        trace.append(
            EstimatorTraceRow(
                t=t,
                theta_hat=est.theta_hat.copy(),
                pred_err_inf=est.pred_errors[-1],
                r_value=lyapunov_value(net.params.h - est.theta_hat, psi),
                pe_ok=verdict.exact,
                kappa=kappa_value,
            )
        )
    traj = dynamics.Trajectory(
        states=np.asarray(states),
        controls=np.asarray(controls).reshape(len(controls), net.n),
        target=float(d),
    )
    return EstimationRun(
        estimator=est,
        trace=trace,
        trajectory=traj,
        alpha=alpha,
        beta=beta,
        psi=psi,
        kappa=kappa_value,
        delta=delta,
        r0=r0,
    )
