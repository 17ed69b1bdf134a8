"""
Guidance Flow Tests - velocity field, Jacobian and trajectory integration
"""

import math

import allure
import numpy as np
import pytest
from loguru import logger

from bohmflow.core.errors import ConfigError, NearNode
from bohmflow.core.guidance import (
    DeviationLog, GuidanceField, IntegratorSettings, PhasePoint, Trajectory, base_flow_coefficients,
    bohmian_velocity, closed_form_velocity, integrate, integrate_with_deviation, velocity_jacobian,
)
from bohmflow.core.nodal import nodal_point


@allure.feature("Guidance Flow")
@allure.story("Velocity Field")
class TestVelocityField:

    @pytest.mark.smoke
    @allure.title("Closed-form base velocity agrees with the generic formula")
    def test_closed_form_matches_generic(self, base_state, rng):
        for _ in range(100):
            p = PhasePoint(rng.uniform(-3, 3, size=3), rng.uniform(0, 50))
            generic = bohmian_velocity(base_state, p)
            closed = closed_form_velocity(p)
            np.testing.assert_allclose(closed, generic, rtol=1e-10, atol=1e-12)

    @allure.title("G is the squared modulus of the reduced amplitude")
    def test_flow_coefficients(self, base_state, rng):
        field_ = GuidanceField(base_state)
        for _ in range(20):
            p = PhasePoint(rng.uniform(-2, 2, size=3), rng.uniform(0, 20))
            coefficients = base_flow_coefficients(p)
            np.testing.assert_allclose(coefficients.A, -coefficients.A.T)
            # reduced density of the base state is 2G/3
            assert field_.reduced_density(p.t, p.x) == pytest.approx(2 * coefficients.G / 3, rel=1e-10)

    @pytest.mark.regression
    @allure.title("Analytic Jacobian matches central differences of the velocity")
    @pytest.mark.parametrize("which", ["base", "perturbed"])
    def test_jacobian(self, which, base_state, perturbed_state, rng):
        state = base_state if which == "base" else perturbed_state
        h = 1e-6
        for _ in range(30):
            x = rng.uniform(-2.5, 2.5, size=3)
            t = rng.uniform(0, 20)
            jacobian = velocity_jacobian(state, PhasePoint(x, t))
            numeric = np.zeros((3, 3))
            for j in range(3):
                step = np.zeros(3)
                step[j] = h
                numeric[:, j] = (bohmian_velocity(state, PhasePoint(x + step, t))
                                 - bohmian_velocity(state, PhasePoint(x - step, t))) / (2 * h)
            np.testing.assert_allclose(jacobian, numeric, rtol=1e-5, atol=1e-5 * np.abs(numeric).max())

    @allure.title("Velocity on the nodal line raises NearNode")
    def test_near_node(self, base_state):
        node = nodal_point(2.0, 3.0).position
        with pytest.raises(NearNode):
            bohmian_velocity(base_state, PhasePoint(node, 2.0))
        with pytest.raises(NearNode):
            closed_form_velocity(PhasePoint(node, 2.0))
        assert not GuidanceField(base_state).is_admissible(2.0, node)

    @allure.title("Phase points must be finite 3-vectors")
    def test_phase_point_validation(self):
        with pytest.raises(ValueError):
            PhasePoint([1.0, 2.0], 0.0)
        with pytest.raises(ValueError):
            PhasePoint([1.0, math.nan, 0.0], 0.0)


@allure.feature("Guidance Flow")
@allure.story("Trajectory Integration")
class TestIntegration:

    @pytest.mark.smoke
    @allure.title("Base-state trajectories stay on their sphere")
    def test_sphere_invariant(self, base_state, settings):
        x0 = np.array([-1.5, 2.0, -2.0])
        trajectory = integrate(base_state, x0, 0.0, 10.0, settings)

        drift = np.max(np.abs(trajectory.radius - np.linalg.norm(x0)))
        logger.info(f"Radius drift over [0, 10]: {drift:.2e}")
        assert drift < 1e-7
        assert trajectory.times[0] == 0.0
        assert trajectory.times[-1] == pytest.approx(10.0)
        np.testing.assert_allclose(trajectory.positions[0], x0)

    @allure.title("Zero-length and backwards spans")
    def test_degenerate_spans(self, base_state, settings):
        single = integrate(base_state, [1.0, 1.0, 1.0], 3.0, 3.0, settings)
        assert len(single) == 1
        with pytest.raises(ValueError):
            integrate(base_state, [1.0, 1.0, 1.0], 3.0, 2.0, settings)

    @allure.title("Starting on the node raises NearNode")
    def test_start_on_node(self, base_state, settings):
        node = nodal_point(2.0, 3.0).position
        with pytest.raises(NearNode):
            integrate(base_state, node, 2.0, 3.0, settings)

    @pytest.mark.regression
    @allure.title("Renormalization threshold does not change ln(xi)")
    def test_renormalization_invariance(self, base_state, settings):
        x0, dx0 = [-1.5, 2.0, -2.0], [0.0, 0.0, 1.0]
        _, reference = integrate_with_deviation(base_state, x0, dx0, 0.0, 10.0, 0.01, settings)
        tight = IntegratorSettings.from_config(deviation_renorm_threshold=0.5)
        _, renormalized = integrate_with_deviation(base_state, x0, dx0, 0.0, 10.0, 0.01, tight)

        assert len(renormalized.renorm_events) > 0
        np.testing.assert_allclose(renormalized.log_xi, reference.log_xi, atol=1e-6)

    @pytest.mark.regression
    @allure.title("Variational deviation matches the separation of two nearby trajectories")
    def test_variational_consistency(self, base_state, settings):
        x0, dx0, h = np.array([-1.5, 2.0, -2.0]), np.array([0.0, 0.0, 1.0]), 1e-7
        _, log = integrate_with_deviation(base_state, x0, dx0, 0.0, 5.0, 0.01, settings)
        first = integrate(base_state, x0, 0.0, 5.0, settings)
        second = integrate(base_state, x0 + h * dx0, 0.0, 5.0, settings)

        n = log.times.size
        np.testing.assert_allclose(first.times[:n], log.times)
        separation = np.linalg.norm(second.positions[:n] - first.positions[:n], axis=1) / h
        relative = np.abs(log.xi - separation) / log.xi
        logger.info(f"Largest relative deviation mismatch: {relative.max():.2e}")
        assert relative.max() < 1e-2

    @allure.title("Deviation samples sit on the tau grid from t0")
    def test_deviation_grid(self, base_state, settings):
        trajectory, log = integrate_with_deviation(base_state, [-1.5, 2.0, -2.0], [0.0, 0.0, 2.0],
                                                   0.0, 1.0, 0.1, settings)
        np.testing.assert_allclose(log.times, trajectory.times)
        assert log.times[0] == 0.0
        assert log.log_xi[0] == pytest.approx(math.log(2.0))
        assert log.times.size in (10, 11)

    @allure.title("Zero deviation vector and non-positive tau are rejected")
    def test_deviation_validation(self, base_state, settings):
        with pytest.raises(ValueError):
            integrate_with_deviation(base_state, [1.0, 1.0, 1.0], [0.0, 0.0, 0.0], 0.0, 1.0, 0.01, settings)
        with pytest.raises(ValueError):
            integrate_with_deviation(base_state, [1.0, 1.0, 1.0], [0.0, 0.0, 1.0], 0.0, 1.0, 0.0, settings)


@allure.feature("Guidance Flow")
@allure.story("Result Types")
class TestResultTypes:

    @allure.title("IntegratorSettings validates its ranges")
    def test_settings_validation(self):
        with pytest.raises(ValueError):
            IntegratorSettings(min_step=1.0, max_step=0.1)
        with pytest.raises(ValueError):
            IntegratorSettings(rel_tol=0.0)

    @allure.title("from_config applies keyword overrides")
    def test_settings_from_config(self, runtime_overrides):
        runtime_overrides.set("integrator.max_step", 0.05)
        settings = IntegratorSettings.from_config(rel_tol=1e-8)
        assert settings.max_step == 0.05
        assert settings.rel_tol == 1e-8
        assert isinstance(settings.max_steps, int)
        with pytest.raises(ConfigError):
            IntegratorSettings.from_config(rel_tl=1e-9)

    @allure.title("Trajectory window and table")
    def test_trajectory(self):
        times = np.linspace(0.0, 1.0, 11)
        positions = np.column_stack([times, 2 * times, np.full(11, 3.0)])
        trajectory = Trajectory(times, positions)

        window = trajectory.window(0.25, 0.75)
        np.testing.assert_allclose(window.times, [0.3, 0.4, 0.5, 0.6, 0.7])
        header, table = trajectory.as_table()
        assert header == "t,x1,x2,x3,R"
        assert table.shape == (11, 5)
        assert table[0, 4] == pytest.approx(3.0)
        with pytest.raises(ValueError):
            Trajectory(times[::-1], positions)

    @allure.title("DeviationLog reconstructs ln(xi) from renormalized norms")
    def test_deviation_log(self):
        log = DeviationLog(tau=0.1, times=np.array([0.0, 0.1, 0.2]), norms=np.array([1.0, 2.0, 0.5]),
                           log_scales=np.array([0.0, 0.0, math.log(10.0)]))
        np.testing.assert_allclose(log.xi, [1.0, 2.0, 5.0])
        header, table = log.as_table()
        assert header == "t,xi,stretching_raw"
        assert math.isnan(table[0, 2])
        assert table[2, 2] == pytest.approx(math.log(2.5))
        with pytest.raises(ValueError):
            DeviationLog(tau=0.1, times=np.array([0.0]), norms=np.array([0.0]), log_scales=np.array([0.0]))
