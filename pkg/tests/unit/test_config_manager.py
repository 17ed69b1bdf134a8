"""
Configuration Manager Tests
"""

import allure
import pytest

from bohmflow.config.config_manager import ConfigManager


@allure.feature("Configuration")
@allure.story("Config Manager")
class TestConfigManager:

    @pytest.mark.smoke
    @allure.title("Singleton instance with dot-notation lookup")
    def test_dot_lookup(self, test_config):
        assert ConfigManager() is test_config
        assert test_config.get("integrator.rel_tol") == pytest.approx(1e-10)
        assert test_config.get("hopf.min_turns") == 2
        assert test_config.get("no.such.key", "fallback") == "fallback"

    @allure.title("Runtime overrides win and can be reset")
    def test_override_priority(self, runtime_overrides, monkeypatch):
        monkeypatch.setenv("EXECUTION_WORKERS", "3")
        assert runtime_overrides.workers == 3
        runtime_overrides.set("execution.workers", 5)
        assert runtime_overrides.workers == 5
        runtime_overrides.reset_overrides()
        assert runtime_overrides.workers == 3

    @allure.title("Environment values are typed through YAML")
    def test_env_typing(self, test_config, monkeypatch):
        monkeypatch.setenv("INTEGRATOR_REL_TOL", "1.0e-9")
        monkeypatch.setenv("OUTPUT_PREVIEWS", "false")
        assert test_config.get("integrator.rel_tol") == 1e-9
        assert test_config.previews is False
        assert test_config.get_section("integrator")["rel_tol"] == 1e-9

    @allure.title("Sections expose every default key")
    def test_sections(self, test_config):
        assert set(test_config.get_section("scattering")) >= {"background_window", "jump_factor"}
        assert {"integrator", "manifold", "hopf", "output"} <= set(test_config.get_all())
        assert test_config.output_directory == "results"
