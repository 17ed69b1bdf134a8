"""
Experiment Configuration - strict YAML experiment files with per-experiment defaults
A config file names one experiment and overrides any of its parameters;
everything it omits is filled from DEFAULTS so the resolved config (and
therefore the run digest) is complete.
"""

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import jsonschema
import numpy as np
import yaml
from loguru import logger

from bohmflow.core.chaos import ScatteringSettings
from bohmflow.core.errors import ConfigError, UnknownExperiment
from bohmflow.core.guidance import IntegratorSettings
from bohmflow.core.manifolds import ManifoldSettings

PERTURBED_X0 = [2.2194, -0.4062, 2.3109]

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "nodal-trajectory": {"R": 4.23, "t_span": [1.0, 250.0], "dt": 0.01},
    "nodal-kinematics": {"R": 4.23, "t_span": [1.0, 10.0], "dt": 0.001, "spike_window": [8.0, 9.0]},
    "complex-portrait": {"t": 4.0, "R": 4.23, "streamlines": 12},
    "hopf-transition": {"R": 5.0, "t_span": [9.4, 9.7], "dt": 0.02, "probe_times": [9.52, 9.6]},
    "foliation": {
        "t": 4.0,
        "R_grid": [round(0.2 * k, 10) for k in range(1, 26)],
        "manifold_layers": [],
    },
    "trajectory-vs-node": {
        "R": 4.23,
        "t_span": [1.0, 15.0],
        "offset": 0.1,
        "offset_direction": "perpendicular",
        "departure": [1.0, 2.0],
        "ordered_x0": None,
        "ordered_t_end": 100.0,
        "fit_window": [10.0, 100.0],
        "dx0": [0.0, 0.0, 1.0],
        "tau": 0.01,
    },
    "trajectory-families": {
        "R": 4.23,
        "t_span": [1.0, 10.0],
        "radii": [0.2, 1.2, 2.2, 3.2, 4.2],
        "offset": 0.1,
        "offsets": [0.1, 0.25, 0.3],
        "offset_direction": "perpendicular",
    },
    "scattering": {
        "x0": [-1.5, 2.0, -2.0],
        "dx0": [0.0, 0.0, 1.0],
        "tau": 0.01,
        "t_span": [0.0, 100.0],
    },
    "perturbed-diffusion": {
        "a4": 0.05,
        "x0": PERTURBED_X0,
        "dx0": [0.0, 0.0, 1.0],
        "tau": 0.01,
        "t_span": [4.0, 100.0],
        "node_dt": 0.1,
    },
    "power-law": {
        "a4_grid": np.geomspace(0.0125, 0.2, 5).tolist(),
        "x0": PERTURBED_X0,
        "t_span": [4.0, 100.0],
    },
}

EXPERIMENTS = tuple(DEFAULTS)
SECTIONS = ("integrator", "manifold", "hopf", "scattering", "execution", "output")
HOPF_KEYS = ("tolerance", "min_turns")

_number = {"type": "number"}
_span = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}
_vector = {"type": "array", "items": _number, "minItems": 3, "maxItems": 3}
_numbers = {"type": "array", "items": _number}


def _section(**properties: Any) -> Dict[str, Any]:
    return {"type": "object", "additionalProperties": False, "properties": properties}


def _settings_section(settings_cls: type, names: Iterable[str]) -> Dict[str, Any]:
    fields = settings_cls.__dataclass_fields__
    return _section(**{name: {"type": "integer", "minimum": 1} if fields[name].type in (int, "int") else _number
                       for name in names})


SECTION_SCHEMAS = {
    "integrator": _settings_section(IntegratorSettings, IntegratorSettings.__dataclass_fields__),
    "manifold": _settings_section(ManifoldSettings, [name for name in ManifoldSettings.__dataclass_fields__
                                                     if name not in HOPF_KEYS]),
    "hopf": _settings_section(ManifoldSettings, HOPF_KEYS),
    "scattering": _settings_section(ScatteringSettings, ScatteringSettings.__dataclass_fields__),
    "execution": _section(workers={"type": "integer", "minimum": 1}),
    "output": _section(directory={"type": ["string", "null"]}, previews={"type": "boolean"}),
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"type": "string"},
        "state": {"type": ["string", "null"]},
        "output_directory": {"type": ["string", "null"]},
        "t_span": _span,
        "t": _number,
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "tau": {"type": "number", "exclusiveMinimum": 0},
        "R": {"type": "number", "exclusiveMinimum": 0},
        "R_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "x0": _vector,
        "dx0": _vector,
        "ordered_x0": {"oneOf": [_vector, {"type": "null"}]},
        "ordered_t_end": _number,
        "fit_window": _span,
        "departure": _span,
        "spike_window": _span,
        "a4": _number,
        "a4_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
        "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "offset": {"type": "number", "exclusiveMinimum": 0},
        "offsets": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "offset_direction": {"enum": ["perpendicular", "along"]},
        "probe_times": _numbers,
        "node_dt": {"type": "number", "exclusiveMinimum": 0},
        "manifold_layers": _numbers,
        "streamlines": {"type": "integer", "minimum": 0},
        **SECTION_SCHEMAS,
    },
}


@dataclass
class ExperimentConfig:
    """
    One experiment with its parameters and settings-section overrides.

    `parameters` holds the experiment's own keys (defaults already merged);
    `sections` holds overrides for the integrator/manifold/hopf/scattering/
    execution/output settings.
    """

    experiment: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    sections: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    state: Optional[str] = None
    output_directory: Optional[str] = None
    source: Optional[Path] = None

    def __getitem__(self, key: str) -> Any:
        try:
            return self.parameters[key]
        except KeyError:
            raise ConfigError(f"experiment {self.experiment!r} has no parameter {key!r}") from None

    def get(self, key: str, default: Any = None) -> Any:
        return self.parameters.get(key, default)

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.sections.get(name, {}))

    def state_path(self) -> Optional[Path]:
        """State file path, relative paths resolved against the config file's directory."""
        if self.state is None:
            return None
        path = Path(self.state)
        if not path.is_absolute() and self.source is not None and not path.exists():
            path = self.source.parent / path
        return path

    def resolved(self) -> Dict[str, Any]:
        """Complete document describing this run (input of the config digest)."""
        document: Dict[str, Any] = {"experiment": self.experiment, "state": self.state}
        document.update(self.parameters)
        document.update({name: self.section(name) for name in SECTIONS if self.sections.get(name)})
        return document


def _apply_override(document: Dict[str, Any], assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"override must look like key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    value = yaml.safe_load(raw)
    if isinstance(value, str):
        # YAML 1.1 reads 1e-9 (no dot) as a string
        try:
            value = float(value)
        except ValueError:
            pass
    keys = key.strip().split(".")
    target = document
    for k in keys[:-1]:
        target = target.setdefault(k, {})
        if not isinstance(target, dict):
            raise ConfigError(f"cannot override {key!r}: {k!r} is not a section")
    target[keys[-1]] = value


def build_experiment_config(document: Dict[str, Any], overrides: Iterable[str] = (),
                            source: Optional[Path] = None) -> ExperimentConfig:
    """
    Validate a raw document (plus key=value overrides) and merge defaults.

    Raises:
        UnknownExperiment: If the experiment name is not registered
        ConfigError: On schema violations or unknown keys
    """
    document = copy.deepcopy(document or {})
    for assignment in overrides:
        _apply_override(document, assignment)

    name = document.get("experiment")
    if name not in DEFAULTS:
        raise UnknownExperiment(f"unknown experiment {name!r}; available: {', '.join(EXPERIMENTS)}")
    try:
        jsonschema.validate(document, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigError(f"invalid experiment config: {e.message}") from e

    parameters = copy.deepcopy(DEFAULTS[name])
    for key, value in document.items():
        if key in ("experiment", "state", "output_directory") or key in SECTIONS:
            continue
        if key not in parameters:
            raise ConfigError(f"parameter {key!r} does not apply to experiment {name!r}")
        parameters[key] = value

    return ExperimentConfig(
        experiment=name,
        parameters=parameters,
        sections={k: dict(document[k]) for k in SECTIONS if k in document},
        state=document.get("state"),
        output_directory=document.get("output_directory"),
        source=source,
    )


def load_experiment_config(path: Union[str, Path, None] = None, overrides: Iterable[str] = (),
                           experiment: Optional[str] = None) -> ExperimentConfig:
    """
    Load an experiment YAML file, or start from defaults when `path` is None.

    Example:
        load_experiment_config("config/experiments/scattering.yml", ["tau=0.005"])
    """
    document: Dict[str, Any] = {}
    source = None
    if path is not None:
        source = Path(path)
        try:
            document = yaml.safe_load(source.read_text()) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {source}: {e}") from e
        if not isinstance(document, dict):
            raise ConfigError(f"{source} must contain a mapping")
        logger.debug(f"Loaded experiment config from {source}")
    if experiment is not None:
        if document.get("experiment", experiment) != experiment:
            raise ConfigError(f"{source} configures {document['experiment']!r}, not {experiment!r}")
        document["experiment"] = experiment
    return build_experiment_config(document, overrides, source)
