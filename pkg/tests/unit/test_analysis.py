"""
Analysis Tests - power-law fits and trajectory summaries
"""

import allure
import numpy as np
import pytest

from bohmflow.core.errors import DegenerateFit
from bohmflow.core.guidance import Trajectory
from bohmflow.experiments.analysis import delta_r_max, first_crossing, fit_power_law


@allure.feature("Analysis")
@allure.story("Power Law")
class TestPowerLaw:

    @pytest.mark.smoke
    @pytest.mark.parametrize("prefactor, exponent", [(1.0, 1.0), (3.0, 2.0), (0.2, 0.5)])
    @allure.title("Exact power laws are recovered")
    def test_exact(self, prefactor, exponent):
        x = np.array([0.025, 0.05, 0.1, 0.15, 0.2])
        fit = fit_power_law(np.column_stack([x, prefactor * x ** exponent]))
        assert fit.exponent == pytest.approx(exponent)
        assert fit.prefactor == pytest.approx(prefactor)
        assert fit.residual == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(fit.predict(x), prefactor * x ** exponent)
        assert set(fit.to_dict()) == {"exponent", "prefactor", "residual"}

    @pytest.mark.regression
    @allure.title("Invalid inputs are rejected")
    def test_invalid(self):
        with pytest.raises(ValueError):
            fit_power_law([(1.0, 2.0)])
        with pytest.raises(ValueError):
            fit_power_law([(1.0, 2.0), (0.0, 1.0)])
        with pytest.raises(DegenerateFit):
            fit_power_law([(0.1, 2.0), (0.1, 3.0)])


@allure.feature("Analysis")
@allure.story("Trajectory Summaries")
class TestTrajectorySummaries:

    @allure.title("Radial spread over the whole span or a window")
    def test_delta_r_max(self):
        times = np.linspace(0.0, 10.0, 101)
        radius = 2.0 + 0.1 * times
        trajectory = Trajectory(times, np.column_stack([radius, np.zeros(101), np.zeros(101)]))
        assert delta_r_max(trajectory) == pytest.approx(1.0)
        assert delta_r_max(trajectory, 0.0, 5.0) == pytest.approx(0.5)
        assert delta_r_max(trajectory, t_end=5.0) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            delta_r_max(trajectory, 20.0, 30.0)

    @allure.title("First crossing is interpolated")
    def test_first_crossing(self):
        times = np.array([0.0, 1.0, 2.0, 3.0])
        values = np.array([0.0, 0.2, 0.6, 1.0])
        assert first_crossing(times, values, 0.4) == pytest.approx(1.5)
        assert first_crossing(times, values, 0.0) == 0.0
        assert first_crossing(times, values, 5.0) is None
