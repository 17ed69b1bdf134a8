"""
Acceptance Tests - figure-level runs of the experiment pipelines

These run the real experiments with default tolerances and take minutes.
Select them with `pytest -m acceptance`, skip them with `-m "not slow"`.
"""

import json

import allure
import numpy as np
import pytest
from loguru import logger

from bohmflow.core.guidance import integrate
from bohmflow.core.manifolds import ManifoldSettings, spiral_profile, trace_all
from bohmflow.core.nodal import planar_flow, xpoint_from_flow
from bohmflow.experiments.experiment_config import build_experiment_config
from bohmflow.experiments.runner import run_experiment

NO_PREVIEWS = ["output.previews=false"]


def _run(experiment, out_dir, *overrides):
    config = build_experiment_config({"experiment": experiment}, list(overrides) + NO_PREVIEWS)
    return run_experiment(config, out_dir)


@pytest.mark.slow
@pytest.mark.acceptance
@allure.feature("Acceptance")
class TestBaseStateAcceptance:

    @allure.story("Sphere invariant")
    @allure.title("Base-state trajectories keep their radius over [1, 100]")
    def test_sphere_invariant(self, base_state, settings, rng):
        for k in range(20):
            x0 = rng.uniform(-3.0, 3.0, size=3)
            trajectory = integrate(base_state, x0, 1.0, 100.0, settings)
            drift = np.max(np.abs(trajectory.radius - trajectory.radius[0])) / trajectory.radius[0]
            logger.info(f"Trajectory {k}: relative radius drift {drift:.2e}")
            assert drift < 1e-6

    @allure.story("Complex topology")
    @allure.title("Unstable branch spirals into the node at t=4, R=4.23")
    def test_complex_topology(self, tmp_path):
        manifest = _run("complex-portrait", tmp_path / "portrait")
        assert manifest.summary["classification"]["label"] == "unstable"

        pf = planar_flow(4.0, 4.23)
        curves = trace_all(pf, xpoint_from_flow(pf), ManifoldSettings.from_config())
        assert len(curves) == 4
        branch = manifest.summary["classification"]["branch"]
        profile = spiral_profile(next(curve for curve in curves if curve.branch == branch))
        assert profile.turns >= 2
        assert profile.approaches

    @allure.story("Hopf transition")
    @allure.title("Label changes from stable to unstable near t = 9.5586 at R = 5")
    def test_hopf_transition(self, tmp_path):
        manifest = _run("hopf-transition", tmp_path / "hopf")
        transitions = manifest.summary["transitions"]
        assert len(transitions) == 1
        assert transitions[0]["before"] == "stable"
        assert transitions[0]["after"] == "unstable"
        assert transitions[0]["t_star"] == pytest.approx(9.5586, abs=0.01)
        assert transitions[0]["width"] <= 1e-3

        document = json.loads((tmp_path / "hopf" / "hopf.json").read_text())
        labels = {round(probe["t"], 2): probe["label"] for probe in document["probes"]}
        assert labels == {9.52: "stable", 9.6: "unstable"}

    @allure.story("Nodal kinematics")
    @allure.title("Speed and acceleration spike inside [8, 9]")
    def test_kinematics_spike(self, tmp_path):
        manifest = _run("nodal-kinematics", tmp_path / "kinematics")
        for quantity in ("speed", "acceleration"):
            record = manifest.summary[quantity]
            assert 8.0 <= record["t_peak"] <= 9.0
            assert record["ratio"] > 5.0

    @allure.story("Trajectory near the node")
    @allure.title("Trajectory follows the node, then departs")
    def test_departure(self, tmp_path):
        summary = _run("trajectory-vs-node", tmp_path / "departure").summary
        assert summary["t_departure"] is not None
        assert 6.0 <= summary["t_departure"] <= 9.0
        assert summary["t_far"] is not None and summary["t_far"] < 15.0

        ordered = summary["ordered"]
        assert ordered["events"] == 0
        assert -1.3 <= ordered["chi_slope"] <= -0.7

    @allure.story("Scattering event")
    @allure.title("One scattering event near t = 2 aligned with an X-point approach")
    def test_scattering(self, tmp_path):
        out = tmp_path / "scattering"
        summary = _run("scattering", out).summary
        events = json.loads((out / "events.json").read_text())

        assert summary["events"] == 1
        assert 1.5 <= events[0]["t_jump"] <= 2.5
        assert events[0]["alignment"] <= 0.5
        assert summary["final_chi"] > 0

        metrics = np.genfromtxt(out / "metrics.csv", delimiter=",", names=True)
        late = metrics["t"] > 6.0
        assert np.all(metrics["cumulative"][late] > 0)


@pytest.mark.slow
@pytest.mark.acceptance
@allure.feature("Acceptance")
class TestPerturbedAcceptance:

    @allure.story("Perturbed diffusion")
    @allure.title("a4 = 0.05 trajectory leaves its sphere")
    def test_perturbed_diffusion(self, tmp_path):
        summary = _run("perturbed-diffusion", tmp_path / "diffusion").summary
        assert summary["delta_r_max"] > 1e-2
        assert summary["delta_r_max"] == pytest.approx(summary["R_max"] - summary["R_min"])

    @allure.story("Power law")
    @allure.title("Delta R_max grows with a4 with exponent close to one")
    def test_power_law(self, tmp_path):
        document = _run("power-law", tmp_path / "power",
                        "a4_grid=[0.025, 0.05, 0.1, 0.15, 0.2]").summary
        logger.info(f"Power-law fit: {document['fit']}")
        assert document["increasing"]
        assert 0.7 <= document["fit"]["exponent"] <= 1.3
        assert document["control_delta_r_max"] < 1e-6


@pytest.mark.slow
@pytest.mark.acceptance
@allure.feature("Acceptance")
@allure.story("Determinism")
class TestDeterminism:

    @pytest.mark.parametrize("experiment, overrides", [
        ("complex-portrait", []),
        ("scattering", ["t_span=[0.0, 10.0]"]),
        ("power-law", ["a4_grid=[0.025, 0.05, 0.1, 0.15, 0.2]", "t_span=[4.0, 30.0]"]),
    ])
    @allure.title("Re-running a config reproduces byte-identical files")
    def test_rerun_identical(self, tmp_path, experiment, overrides):
        first = _run(experiment, tmp_path / "first", *overrides)
        second = _run(experiment, tmp_path / "second", *overrides)
        assert first.files and first.digests() == second.digests()
