"""
Experiment Configuration Tests - YAML files, defaults and command-line overrides
"""

import allure
import pytest
import yaml

from bohmflow.core.errors import ConfigError, UnknownExperiment
from bohmflow.experiments.experiment_config import (
    DEFAULTS, EXPERIMENTS, build_experiment_config, load_experiment_config,
)


@allure.feature("Configuration")
@allure.story("Experiment Files")
class TestExperimentConfig:

    @pytest.mark.smoke
    @allure.title("Defaults fill every parameter")
    def test_defaults(self):
        config = load_experiment_config(experiment="nodal-trajectory")
        assert config.parameters == DEFAULTS["nodal-trajectory"]
        assert config["R"] == 4.23
        assert config.resolved()["experiment"] == "nodal-trajectory"
        with pytest.raises(ConfigError):
            config["tau"]

    @pytest.mark.smoke
    @allure.title("Every shipped experiment file loads")
    def test_shipped_files(self, experiment_configs):
        files = sorted(experiment_configs.glob("*.yml"))
        names = {load_experiment_config(path).experiment for path in files}
        assert names == set(EXPERIMENTS)

    @allure.title("State paths resolve against the config file")
    def test_state_path(self, experiment_configs):
        config = load_experiment_config(experiment_configs / "perturbed_diffusion.yml")
        if config.state is not None:
            assert config.state_path().exists()

    @pytest.mark.regression
    @allure.title("Unknown experiments and keys are rejected")
    def test_rejections(self):
        with pytest.raises(UnknownExperiment):
            build_experiment_config({"experiment": "frobnicate"})
        with pytest.raises(ConfigError):
            build_experiment_config({"experiment": "scattering", "colour": "red"})
        with pytest.raises(ConfigError):
            build_experiment_config({"experiment": "scattering", "R": 4.0})
        with pytest.raises(ConfigError):
            build_experiment_config({"experiment": "scattering", "tau": -1.0})

    @pytest.mark.regression
    @pytest.mark.parametrize("assignment", [
        "integrator.rel_tl=1e-9",
        "execution.wrokers=2",
        "output.preview=false",
        "hopf.min_turns=0",
        "manifold.min_turns=3",
    ])
    @allure.title("Settings sections reject unknown or invalid keys")
    def test_section_rejections(self, assignment):
        with pytest.raises(ConfigError):
            build_experiment_config({"experiment": "scattering"}, [assignment])

    @allure.title("--set overrides parameters and settings sections")
    def test_overrides(self):
        config = build_experiment_config(
            {"experiment": "scattering"},
            ["tau=1e-3", "t_span=[0, 5]", "integrator.rel_tol=1e-11", "execution.workers=2"])
        assert config["tau"] == 1e-3
        assert config["t_span"] == [0, 5]
        assert config.section("integrator") == {"rel_tol": 1e-11}
        assert config.section("execution") == {"workers": 2}
        assert config.resolved()["integrator"] == {"rel_tol": 1e-11}
        with pytest.raises(ConfigError):
            build_experiment_config({"experiment": "scattering"}, ["tau"])

    @allure.title("Config file for another experiment is refused")
    def test_name_mismatch(self, tmp_path):
        path = tmp_path / "scattering.yml"
        path.write_text(yaml.safe_dump({"experiment": "scattering"}))
        with pytest.raises(ConfigError):
            load_experiment_config(path, experiment="foliation")
        assert load_experiment_config(path, experiment="scattering").experiment == "scattering"

    @allure.title("Malformed YAML is a config error")
    def test_malformed(self, tmp_path):
        path = tmp_path / "broken.yml"
        path.write_text("experiment: [unclosed")
        with pytest.raises(ConfigError):
            load_experiment_config(path)
