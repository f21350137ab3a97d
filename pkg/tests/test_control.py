"""Steering-law and schedule tests, including the exact per-step
contraction identity."""

import numpy as np
import pytest

from pdls.control import ControlParams, SteeringSchedule, blend_drift, eta, lqr_control
from pdls.flowfield import TerminalTimeError


class TestSchedule:
    def test_pinned_values(self):
        sched = SteeringSchedule(0.5)
        assert eta(sched, 0.0) == pytest.approx(0.5, abs=1e-15)
        assert eta(sched, 0.5) == pytest.approx(0.25, abs=1e-15)
        assert eta(sched, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_endpoints_for_several_strengths(self):
        for eta_max in (0.1, 0.5, 1.0):
            sched = SteeringSchedule(eta_max)
            assert abs(eta(sched, 0.0) - eta_max) < 1e-12
            assert abs(eta(sched, 0.5) - eta_max / 2) < 1e-12
            assert abs(eta(sched, 1.0)) < 1e-12

    def test_half_turn_symmetry(self):
        sched = SteeringSchedule(0.8)
        for t in np.linspace(0, 1, 21):
            assert eta(sched, t) + eta(sched, 1 - t) == pytest.approx(0.8, abs=1e-12)

    def test_monotone_decay(self):
        sched = SteeringSchedule(1.0)
        vals = [eta(sched, t) for t in np.linspace(0, 1, 50)]
        assert np.all(np.diff(vals) < 0)

    def test_constant_kind(self):
        sched = SteeringSchedule(0.3, kind="constant")
        for t in (0.0, 0.4, 1.0):
            assert eta(sched, t) == 0.3

    def test_time_out_of_range(self):
        with pytest.raises(ValueError, match="time out of range"):
            eta(SteeringSchedule(0.5), 1.2)

    def test_strength_validation(self):
        with pytest.raises(ValueError, match="eta_max"):
            SteeringSchedule(1.5)
        with pytest.raises(ValueError, match="schedule kind"):
            SteeringSchedule(0.5, kind="linear")

    def test_gamma_validation(self):
        with pytest.raises(ValueError, match="gamma"):
            ControlParams(gamma=-0.1, schedule=SteeringSchedule(0.5))


class TestLqrControl:
    def test_pinned_values(self):
        assert np.allclose(lqr_control(np.zeros(2), np.array([1.0, 0.0]), 0.5), [2.0, 0.0])
        assert np.allclose(lqr_control(np.ones(2), np.ones(2), 0.7), [0.0, 0.0])
        assert np.allclose(lqr_control(np.array([1.0, 2.0]), np.zeros(2), 0.75), [-4.0, -8.0])

    def test_points_toward_target(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            x = rng.standard_normal(3)
            y = rng.standard_normal(3)
            t = rng.uniform(0, 0.9)
            c = lqr_control(x, y, t)
            assert float(np.dot(c, y - x)) >= 0.0

    def test_terminal_time_raises(self):
        with pytest.raises(TerminalTimeError):
            lqr_control(np.zeros(2), np.ones(2), 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            lqr_control(np.zeros(2), np.zeros(3), 0.5)

    def test_contraction_identity(self):
        # One pure-control Euler step contracts the distance to a fixed
        # target by exactly (1 - dt/(1-t)).
        rng = np.random.default_rng(11)
        for _ in range(1000):
            d = int(rng.integers(1, 6))
            x = rng.standard_normal(d) * 3
            y = rng.standard_normal(d) * 3
            t = rng.uniform(0, 0.95)
            dt = rng.uniform(0, 1 - t)
            x_next = x + dt * lqr_control(x, y, t)
            lhs = np.linalg.norm(x_next - y)
            rhs = (1 - dt / (1 - t)) * np.linalg.norm(x - y)
            assert abs(lhs - rhs) < 1e-12


class TestBlend:
    def test_pinned_values(self):
        base = np.array([1.0, 0.0])
        guided = np.array([3.0, 0.0])
        assert np.allclose(blend_drift(base, guided, 0.0), base)
        assert np.allclose(blend_drift(base, guided, 1.0), guided)
        assert np.allclose(blend_drift(base, guided, 0.5), [2.0, 0.0])

    def test_affine_in_weight(self):
        rng = np.random.default_rng(2)
        base = rng.standard_normal(4)
        guided = rng.standard_normal(4)
        for w in (0.1, 0.37, 0.9):
            assert np.allclose(blend_drift(base, guided, w),
                               (1 - w) * base + w * guided, atol=1e-14)

    def test_weight_validation(self):
        with pytest.raises(ValueError, match="blend weight"):
            blend_drift(np.zeros(2), np.zeros(2), 1.1)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            blend_drift(np.zeros(2), np.zeros(3), 0.5)
