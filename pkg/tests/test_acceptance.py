"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every tolerance is fixed here, nothing is calibrated at runtime.
"""

import math

import numpy as np

from opsteer import (
    GradientControllerConfig,
    FeasibilityProblem,
    OnlineHyperparams,
    RateSchedule,
    build_regressor,
    contraction_factor,
    cost_of_schedule,
    cost_weight,
    error_bound,
    make_network,
    one_step_loss,
    one_step_loss_gradient,
    run_estimation,
    run_gradient_baseline,
    run_online,
    schedule_policy,
    simulate,
    simulate_schedule,
    solve_schedule,
    step,
    suggest_alpha0,
    sweep,
    theta_error_bound,
)
from opsteer.feasibility import budget_matched_schedule
from opsteer.network import random_network
from opsteer.online import _initial_error_bound

from conftest import admissible_u, rand_net


def _report(num, name):
    print(f"[criterion {num:2d}] {name}: PASS")


def test_criterion_1_invariance():
    """1000 randomized admissible runs stay in [0,1]^n; zero violations."""
    rng = np.random.default_rng(1)
    for case in range(1000):
        n = int(rng.integers(2, 13))
        net = rand_net(seed=20_000 + case, n=n, density=float(rng.uniform(0, 1)))
        d = float(rng.uniform(0, 1))
        x = rng.uniform(0, 1, n)
        for _ in range(30):
            u = admissible_u(rng, net.params.h)  # h_i u_i in [0, 1]
            x = step(x, u, net, d)  # raises StateOutOfBox beyond 1e-12
            assert x.min() >= 0.0 and x.max() <= 1.0
    _report(1, "invariance of [0,1]^n under admissible control")


def test_criterion_2_exponential_stability():
    """Per-step bound |x(t)-d|_inf <= (1-eta(t)) |x(t-1)-d|_inf, 200 runs."""
    rng = np.random.default_rng(2)
    for case in range(200):
        n = int(rng.integers(2, 13))
        net = rand_net(seed=30_000 + case, n=n)
        d = float(rng.uniform(0.05, 0.95))
        x = rng.uniform(0, 1, n)
        for _ in range(25):
            u = admissible_u(rng, net.params.h, lo=0.05, hi=0.95)  # strict
            eta = contraction_factor(u, net.params)
            x_next = step(x, u, net, d)
            before = np.abs(x - d).max()
            after = np.abs(x_next - d).max()
            assert after <= (1.0 - eta) * before * (1 + 1e-12) + 1e-15
            x = x_next
    _report(2, "per-step exponential contraction bound")


def test_criterion_3_cost_and_error_bound_exactness():
    """Simulated cost equals the closed form to 1e-9 relative; simulated
    final error never exceeds the closed-form error bound."""
    rng = np.random.default_rng(3)
    for case in range(50):
        n = int(rng.integers(2, 13))
        net = rand_net(seed=40_000 + case, n=n)
        sched = RateSchedule(a=float(rng.uniform(0.05, 0.95)), b=float(rng.uniform(0.05, 0.95)))
        T = int(rng.integers(1, 400))
        d = float(rng.uniform(0.05, 0.95))
        x0 = rng.uniform(0, 1, n)
        s_weight = cost_weight(net.params.h)
        expected_cost = cost_of_schedule(sched, T, s_weight)
        bound = error_bound(sched, T, float(np.abs(x0 - d).max()))
        for traj in (
            simulate_schedule(net, x0, d, sched, T),
            simulate(net, x0, d, schedule_policy(sched, net.params.h), T),
        ):
            assert abs(traj.total_cost - expected_cost) <= 1e-9 * max(expected_cost, 1e-30)
            assert traj.final_error <= bound + 1e-12
    _report(3, "closed-form cost exactness and error-bound validity")


def test_criterion_4_feasibility_soundness():
    """Feasible schedules meet eps and the budget end to end; condition-1
    infeasibility verified против the threshold independently."""
    rng = np.random.default_rng(4)
    n_feasible = n_infeasible = 0
    for case in range(60):
        net = rand_net(seed=50_000 + case, n=int(rng.integers(2, 13)))
        x0_err = float(rng.uniform(0.3, 1.0))
        problem = FeasibilityProblem(
            T=int(rng.integers(5, 300)),
            eps=float(rng.uniform(0.02, x0_err)),
            x0_err=x0_err,
            c_max=float(rng.uniform(0.5, 12.0)),
            s_weight=cost_weight(net.params.h),
        )
        result = solve_schedule(problem)
        if result.feasible:
            n_feasible += 1
            x0 = np.full(net.n, x0_err)  # target 0 puts err_inf at x0_err
            traj = simulate_schedule(net, x0, 0.0, result.schedule, problem.T, problem.c_max)
            assert traj.final_error <= problem.eps * (1 + 1e-9)
            assert traj.total_cost <= problem.c_max
        elif result.failed_condition == "condition1":
            n_infeasible += 1
            assert problem.eps < problem.x0_err * math.exp(-problem.c_max / problem.s_weight)
    assert n_feasible >= 15 and n_infeasible >= 5
    _report(4, f"feasibility soundness ({n_feasible} feasible, {n_infeasible} infeasible checked)")


def _estimation_cases(count):
    for case in range(count):
        rng = np.random.default_rng(case)
        n = int(rng.integers(2, 11))
        g, p = random_network(n, 0.5, (0.2, 0.8), (0.3, 0.7), seed=60_000 + case)
        net = make_network(g, p)
        d = 0.9
        x0 = rng.uniform(0.0, 0.35, n)
        theta0 = np.full(n, 0.5)
        e0 = _initial_error_bound(theta0, net.params.h_min, net.params.h_max)
        u_max0 = 1.0 / (theta0 + e0).max()
        alpha = suggest_alpha0(net.lambda_V, u_max0, x0, d, margin_frac=0.25)
        yield net, d, run_estimation(net, x0, d, alpha=alpha, steps=100)


def test_criterion_5_estimator_contraction():
    """With psi = 1/beta^2 along PE-verified runs: R(t) <= (1-kappa) R(t-1)
    and measured |theta_err| <= sqrt(2 psi R0)(1-kappa)^(t/2), 1e-9 slack."""
    for net, d, run in _estimation_cases(100):
        assert len(run.trace) >= 2
        prev_r = run.r0
        for row in run.trace:
            assert row.pe_ok  # PE verified at the design level each step
            assert row.r_value <= (1 - run.kappa) * prev_r * (1 + 1e-9)
            measured = np.linalg.norm(net.params.h - row.theta_hat)
            bound = theta_error_bound(run.r0, run.psi, run.kappa, row.t)
            assert measured <= bound * (1 + 1e-9)
            prev_r = row.r_value
    _report(5, "Lyapunov contraction and parameter error bound (100 runs)")


def test_criterion_6_error_recursion():
    """Estimator error follows (I - psi F^T F) theta_err to 1e-12 per step."""
    for net, d, run in _estimation_cases(25):
        assert run.estimator.clamp_events == 0
        theta_prev = np.full(net.n, 0.5)
        for i, row in enumerate(run.trace):
            reg = build_regressor(
                run.trajectory.states[i], run.trajectory.controls[i], d, net.V
            )
            expected = (np.eye(net.n) - run.psi * reg.F.T @ reg.F) @ (net.params.h - theta_prev)
            assert np.abs((net.params.h - row.theta_hat) - expected).max() <= 1e-12
            theta_prev = row.theta_hat
    _report(6, "exact parameter-error recursion (1e-12 per step)")


def test_criterion_7_online_algorithm():
    """20 randomized scenarios (n in {2,5,10}): convergence below 1e-4 within
    200 cycles, combined error non-increasing after m_star, strictly
    decreasing radii, excitation margin honored at every excited step."""
    for i in range(20):
        n = [2, 5, 10][i % 3]
        rng = np.random.default_rng(1000 + i)
        g, p = random_network(n, 0.5, (0.2, 0.8), (0.3, 0.7), seed=2000 + i)
        net = make_network(g, p)
        d = 0.9
        x0 = rng.uniform(0.02, 0.45, n)
        res = run_online(net, x0, d, OnlineHyperparams())
        assert res.terminated == "converged"
        assert len(res.cycles) <= 200
        assert res.final_err_inf <= 1e-4
        es = [c.combined_error for c in res.cycles] + [res.final_combined_error]
        m_star = res.m_star if res.m_star is not None else len(res.cycles)
        for k in range(m_star, len(es) - 1):
            assert es[k + 1] <= es[k] * (1 + 1e-12)
        deltas = [c.delta for c in res.cycles]
        assert all(b < a for a, b in zip(deltas, deltas[1:]))
        t = 0
        for c in res.cycles:
            for s in range(c.steps_explore):
                assert (np.abs(res.trajectory.states[t + s] - d) > c.delta).all()
            t += c.steps_explore + c.steps_exploit
    _report(7, "online algorithm convergence, monotone combined error, margins")


def test_criterion_8_cost_of_learning():
    """At equal budgets, known-parameter control reaches an error no worse
    than adaptive control on 10 scenarios, strictly better in >= 8."""
    wins = strict = 0
    for i in range(10):
        n = [2, 5, 10][i % 3]
        rng = np.random.default_rng(4000 + i)
        g, p = random_network(n, 0.5, (0.2, 0.8), (0.3, 0.7), seed=5000 + i)
        net = make_network(g, p)
        d = 0.9
        x0 = rng.uniform(0.02, 0.45, n)
        c_max = 3.0 * n
        T = 400
        _, known = budget_matched_schedule(net, x0, d, T, c_max)
        adaptive = run_online(net, x0, d, OnlineHyperparams(budget=c_max, max_total_steps=T))
        assert known.total_cost <= c_max and adaptive.trajectory.total_cost <= c_max
        if known.final_error <= adaptive.final_err_inf:
            wins += 1
        if known.final_error < adaptive.final_err_inf:
            strict += 1
    assert wins == 10
    assert strict >= 8
    _report(8, f"cost of learning ordering (strict in {strict}/10)")


def test_criterion_9_baseline_ordering():
    """Across budgets 10..50 on weakly coupled networks, the analytic
    schedule's final error never exceeds the gradient baseline's at equal
    budget, and both curves are monotone non-increasing."""
    T, d = 300, 0.9
    for seed in (42, 7, 13):
        g, p = random_network(8, 0.05, (0.02, 0.15), (0.4, 0.9), seed=seed)
        net = make_network(g, p)
        x0 = np.random.default_rng(seed).uniform(0.0, 0.3, 8)
        prev_a = prev_g = np.inf
        for c_max in range(10, 51, 5):
            _, known = budget_matched_schedule(net, x0, d, T, float(c_max))
            cfg = GradientControllerConfig(
                horizon=T, c_max=float(c_max), step_size=0.1,
                max_inner_iters=1, interval_tol=1e-4,
            )
            grad = run_gradient_baseline(net, x0, d, cfg)
            e_a, e_g = known.final_error, grad.final_error
            assert e_a <= e_g
            assert e_a <= prev_a * (1 + 1e-12)
            assert e_g <= prev_g * (1 + 1e-12)
            prev_a, prev_g = e_a, e_g
    _report(9, "analytic vs gradient-baseline ordering across the budget sweep")


def test_criterion_10_gradient_correctness():
    """Analytic one-step loss gradient matches central finite differences
    to 1e-6 relative on 100 random instances."""
    rng = np.random.default_rng(10)
    for case in range(100):
        n = int(rng.integers(2, 13))
        net = rand_net(seed=70_000 + case, n=n)
        x = rng.uniform(0, 1, n)
        u = rng.uniform(0, 1.2, n) / net.params.h
        d = float(rng.uniform(0.05, 0.95))
        g = one_step_loss_gradient(x, u, net.params.h, net.V, d)
        fd = np.empty(n)
        eps = 1e-6
        for j in range(n):
            up, um = u.copy(), u.copy()
            up[j] += eps
            um[j] -= eps
            fd[j] = (one_step_loss(x, up, net.params.h, net.V, d)
                     - one_step_loss(x, um, net.params.h, net.V, d)) / (2 * eps)
        assert np.linalg.norm(g - fd) <= 1e-6 * max(np.linalg.norm(g), 1e-9)
    _report(10, "one-step loss gradient vs finite differences (100 instances)")


def test_criterion_11_determinism(tmp_path):
    """Identical configs give byte-identical outputs, also in parallel sweeps."""
    def cfg(seed, controller):
        return {
            "version": 1,
            "scenario": {"type": "random", "n": 5, "density": 0.5,
                         "lambda_range": [0.2, 0.8], "h_range": [0.3, 0.7], "seed": seed},
            "target": 0.9,
            "x0": {"type": "random", "seed": seed + 1},
            "horizon": 2000,
            "budget": None,
            "controller": controller,
        }

    configs = [cfg(s, {"type": "known-analytic", "a": 0.4, "b": 0.9}) for s in range(4)]
    configs += [cfg(9, {"type": "adaptive-online"})]
    d1, d8, d1b = tmp_path / "p1", tmp_path / "p8", tmp_path / "p1b"
    rec1 = sweep(configs, d1, parallelism=1)
    rec8 = sweep(configs, d8, parallelism=8)
    rec1b = sweep(configs, d1b, parallelism=1)
    assert all(r.status == "ok" for r in rec1)
    assert [r.run_id for r in rec1] == [r.run_id for r in rec8] == [r.run_id for r in rec1b]
    for a, b in ((d8, d1), (d1b, d1)):
        for rec in rec1:
            for trace in (rec.trajectory_csv, rec.cycles_csv, rec.estimator_csv):
                if trace:
                    assert (a / trace).read_bytes() == (b / trace).read_bytes()
    _report(11, "byte-identical outputs, sequential and parallel")
