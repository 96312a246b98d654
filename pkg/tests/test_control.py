import numpy as np
import pytest

from opsteer import (
    RateSchedule,
    ThetaCap,
    contraction_factor,
    exploitation_control,
    exponential_control,
    pe_control,
    uniform_control,
)
from opsteer.errors import AtTarget, InvalidRange

from conftest import rand_net


class TestRateSchedule:
    def test_rate_values(self):
        sched = RateSchedule(a=0.5, b=0.5)
        assert sched.rate(0) == 0.5
        assert sched.rate(1) == 0.25
        assert sched.rate(10) < 5e-4

    def test_invalid_parameters(self):
        for a, b in ((0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0), (-0.1, 0.5)):
            with pytest.raises(InvalidRange):
                RateSchedule(a=a, b=b)


class TestExponentialControl:
    def test_direct_formula(self):
        sched = RateSchedule(a=0.5, b=0.5)
        u = exponential_control(sched, t=1, h=np.array([0.25]))
        assert abs(u[0] - 1.0) < 1e-15

    def test_vector_formula(self):
        sched = RateSchedule(a=0.4, b=0.9)
        u = exponential_control(sched, t=0, h=np.array([0.5, 1.0]))
        assert np.abs(u - [0.8, 0.4]).max() < 1e-15

    def test_vanishes_for_large_t(self):
        sched = RateSchedule(a=0.9, b=0.5)
        assert exponential_control(sched, t=60, h=np.array([0.1])).max() < 1e-14


class TestUniformControl:
    def test_direct_formula(self):
        assert abs(uniform_control(0.3, 0.6) - 0.5) < 1e-15

    def test_coincides_for_homogeneous_agents(self):
        sched = RateSchedule(a=0.3, b=0.9)
        h = np.array([0.6, 0.6])
        u_c = uniform_control(sched.rate(0), 0.6)
        assert np.abs(exponential_control(sched, 0, h) - u_c).max() < 1e-15

    def test_contraction_interval(self):
        u_c = uniform_control(0.5, 0.5)
        h = np.array([0.25, 0.5])
        hu = h * u_c
        assert hu.min() >= 0.25 - 1e-15 and hu.max() <= 0.5 + 1e-15


class TestPeControl:
    def test_unclipped_value(self):
        cap = ThetaCap(np.array([0.5]))
        u = pe_control(np.array([0.5]), d=1.0, alpha=0.1, lambda_V=1 / 3, cap=cap)
        assert abs(u[0] - 0.6) < 1e-12

    def test_clipped_at_cap(self):
        cap = ThetaCap(np.array([0.5]))
        u = pe_control(np.array([0.5]), d=1.0, alpha=1.0, lambda_V=1 / 3, cap=cap)
        assert abs(u[0] - 2.0) < 1e-15

    def test_zero_excitation(self):
        cap = ThetaCap(np.array([0.5, 0.5]))
        u = pe_control(np.array([0.2, 0.4]), 1.0, alpha=0.0, lambda_V=0.5, cap=cap)
        assert np.array_equal(u, np.zeros(2))

    def test_at_target_rejected(self):
        cap = ThetaCap(np.array([0.5, 0.5]))
        with pytest.raises(AtTarget):
            pe_control(np.array([1.0, 0.4]), 1.0, alpha=0.1, lambda_V=0.5, cap=cap)

    def test_never_exceeds_cap(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            cap = ThetaCap(rng.uniform(0.1, 2.0, n))
            x = rng.uniform(0.0, 0.99, n)
            u = pe_control(x, 1.0, float(rng.uniform(0, 2)), float(rng.uniform(0.05, 1)), cap)
            assert (u <= 1.0 / cap.theta_max + 1e-15).all()
            assert (u >= 0).all()


class TestExploitationControl:
    def test_direct_formula(self):
        u = exploitation_control(0.2, ThetaCap(np.array([0.5])))
        assert abs(u[0] - 0.4) < 1e-15

    def test_exact_cap_reduces_to_exponential(self):
        h = np.array([0.5, 0.25])
        sched = RateSchedule(a=0.3, b=0.9)
        u = exploitation_control(sched.rate(2), ThetaCap(h))
        assert np.abs(u - exponential_control(sched, 2, h)).max() < 1e-15

    def test_conservative_cap_halves_contraction(self, k2_net):
        h = k2_net.params.h
        cap = ThetaCap(2.0 * h)
        u = exploitation_control(0.4, cap)
        assert abs(contraction_factor(u, k2_net.params) - 0.2) < 1e-15

    def test_monotone_in_cap(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            theta_max = rng.uniform(0.1, 1.5, n)
            grow = theta_max * rng.uniform(1.0, 3.0, n)
            r = float(rng.uniform(0.01, 0.99))
            u1 = exploitation_control(r, ThetaCap(theta_max))
            u2 = exploitation_control(r, ThetaCap(grow))
            assert (u2 <= u1 + 1e-15).all()


class TestAdmissibilityAgainstTrueParams:
    def test_every_law_admissible(self):
        rng = np.random.default_rng(8)
        for seed in range(100):
            net = rand_net(seed)
            h = net.params.h
            sched = RateSchedule(a=float(rng.uniform(0.05, 0.95)), b=float(rng.uniform(0.05, 0.95)))
            t = int(rng.integers(0, 20))
            for u in (
                exponential_control(sched, t, h),
                np.full(net.n, uniform_control(sched.rate(t), net.params.h_max)),
                exploitation_control(sched.rate(t), ThetaCap(h + rng.uniform(0, 0.5, net.n))),
            ):
                hu = h * u
                assert (u >= 0).all() and hu.max() < 1.0
