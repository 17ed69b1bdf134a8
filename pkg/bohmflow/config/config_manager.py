"""
Configuration Manager - Centralized configuration handling
Supports YAML configs, environment variables, and runtime overrides
"""

import os
import yaml
from typing import Any, Dict
from pathlib import Path
from dotenv import load_dotenv
from loguru import logger


PROJECT_ROOT = Path(__file__).parent.parent.parent


class ConfigManager:
    """
    Centralized configuration management with multiple sources.
    Priority: Runtime > Environment Variables > Config File > Defaults
    """

    _instance = None
    _config: Dict[str, Any] = {}
    _overrides: Dict[str, Any] = {}

    def __new__(cls):
        """Singleton pattern to ensure single config instance."""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        """Initialize configuration manager."""
        if self._initialized:
            return

        self._initialized = True
        self._config = {}
        self._overrides = {}
        self._load_env_variables()
        self._load_config_file()
        self._set_defaults()
        logger.debug("Configuration Manager initialized")

    def _load_env_variables(self) -> None:
        """Load environment variables from .env file."""
        env_file = PROJECT_ROOT / ".env"
        if env_file.exists():
            load_dotenv(env_file)
            logger.debug(f"Loaded environment variables from {env_file}")

    def _load_config_file(self) -> None:
        """Load configuration from YAML file."""
        env = os.getenv("BOHMFLOW_ENV", "dev")
        config_file = PROJECT_ROOT / "config" / f"{env}_config.yml"

        if not config_file.exists():
            logger.warning(f"Config file not found: {config_file}")
            return

        try:
            with open(config_file, "r") as f:
                self._config = yaml.safe_load(f) or {}
            logger.debug(f"Loaded configuration from {config_file}")
        except (OSError, yaml.YAMLError) as e:
            logger.error(f"Error loading config file: {e}")

    def _set_defaults(self) -> None:
        """Set default values for essential configurations."""
        defaults = {
            "integrator": {
                "rel_tol": 1e-10,
                "abs_tol": 1e-10,
                "max_step": 0.1,
                "min_step": 1e-12,
                "node_guard": 1e-12,
                "deviation_renorm_threshold": 1e8,
                "step_safety": 0.1,
                "output_interval": 0.01,
                "max_steps": 5_000_000,
            },
            "manifold": {
                "seed": 1e-5,
                "rel_tol": 1e-10,
                "abs_tol": 1e-12,
                "arc_length_factor": 60.0,
                "capture_fraction": 1e-3,
                "box_factor": 2.0,
                "s_max": 1e4,
            },
            "hopf": {
                "tolerance": 1e-3,
                "min_turns": 2,
            },
            "scattering": {
                "background_window": 1.0,
                "jump_factor": 10.0,
            },
            "execution": {
                "workers": 1,
            },
            "output": {
                "directory": "results",
                "previews": True,
            },
            "logging": {
                "level": "INFO",
                "file": None,
                "console": True,
            },
        }

        # Loaded config takes priority over defaults
        for section, values in defaults.items():
            if section not in self._config:
                self._config[section] = dict(values)
            else:
                for key, value in values.items():
                    if key not in self._config[section]:
                        self._config[section][key] = value

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value using dot notation.

        Args:
            key: Configuration key (e.g., 'integrator.rel_tol')
            default: Default value if key not found

        Returns:
            Configuration value

        Example:
            config.get('integrator.rel_tol')  # Returns 1e-10
            config.get('execution.workers')   # Returns 1
        """
        if key in self._overrides:
            return self._overrides[key]

        # Environment variable next, typed through YAML
        env_key = key.upper().replace(".", "_")
        env_value = os.getenv(env_key)
        if env_value is not None:
            return yaml.safe_load(env_value)

        keys = key.split(".")
        value = self._config

        try:
            for k in keys:
                value = value[k]
            return value
        except (KeyError, TypeError):
            logger.debug(f"Config key not found: {key}, returning default: {default}")
            return default

    def set(self, key: str, value: Any) -> None:
        """
        Set configuration value using dot notation.

        Args:
            key: Configuration key (e.g., 'integrator.rel_tol')
            value: Value to set
        """
        keys = key.split(".")
        section = self._config

        for k in keys[:-1]:
            if k not in section:
                section[k] = {}
            section = section[k]

        section.setdefault(keys[-1], value)
        self._overrides[key] = value
        logger.debug(f"Set config: {key} = {value}")

    def get_section(self, section: str) -> Dict[str, Any]:
        """
        Get entire configuration section, environment overrides applied.

        Args:
            section: Section name (e.g., 'integrator')

        Returns:
            Dictionary of section configuration
        """
        values = self._config.get(section, {})
        return {key: self.get(f"{section}.{key}") for key in values}

    def update_section(self, section: str, values: Dict[str, Any]) -> None:
        """
        Update entire section with new values.

        Args:
            section: Section name
            values: Dictionary of values to update
        """
        if section not in self._config:
            self._config[section] = {}

        self._config[section].update(values)
        logger.debug(f"Updated section: {section}")

    def reset_overrides(self) -> None:
        """Drop all runtime overrides made with set()."""
        self._overrides.clear()

    def get_all(self) -> Dict[str, Any]:
        """Get entire configuration."""
        return {section: self.get_section(section) for section in self._config}

    # ============= Convenience Methods =============

    @property
    def env(self) -> str:
        """Get active configuration environment."""
        return os.getenv("BOHMFLOW_ENV", "dev")

    @property
    def workers(self) -> int:
        """Get number of parallel workers."""
        return int(self.get("execution.workers", 1))

    @property
    def output_directory(self) -> str:
        """Get default output directory."""
        return self.get("output.directory", "results")

    @property
    def previews(self) -> bool:
        """Get SVG preview setting."""
        return bool(self.get("output.previews", True))

    @property
    def log_level(self) -> str:
        """Get logging level."""
        return self.get("logging.level", "INFO")

    @property
    def log_file(self):
        """Get log file path (None disables the file sink)."""
        return self.get("logging.file", None)


# Global instance
config = ConfigManager()
