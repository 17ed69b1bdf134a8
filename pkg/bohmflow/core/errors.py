"""
Errors raised by bohmflow.

Numerical failures carry the time/position/layer at which they happened so a
single trajectory or layer can be re-run from the message alone.
"""

from typing import Any, Optional

import numpy as np


class BohmflowError(Exception):
    """Base class for all bohmflow errors."""

    def __init__(self, message: str, **context: Any):
        self.context = {k: v for k, v in context.items() if v is not None}
        if self.context:
            details = ", ".join(f"{k}={_fmt(v)}" for k, v in self.context.items())
            message = f"{message} ({details})"
        super().__init__(message)

    def __getattr__(self, name: str) -> Any:
        context = self.__dict__.get("context", {})
        if name in context:
            return context[name]
        raise AttributeError(name)


def _fmt(value: Any) -> str:
    if isinstance(value, np.ndarray):
        return np.array2string(value, precision=6, separator=",")
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


class CapacityError(BohmflowError, ValueError):
    """Quantum number beyond the supported maximum."""


class NormalizationError(BohmflowError, ValueError):
    """Superposition coefficients are not normalized or modes repeat."""


class ConfigError(BohmflowError, ValueError):
    """Invalid configuration or state file."""


class NearNode(BohmflowError):
    """|Psi|^2 (or G) fell below the node guard at the evaluation point."""


class NodeCollision(BohmflowError):
    """Step control could not keep a trajectory away from a node."""


class StepUnderflow(BohmflowError):
    """Error control demanded a step below the configured minimum."""


class DegenerateTime(BohmflowError):
    """Nodal direction undefined (all sin(w_ij t) vanish)."""


class NoConvergence(BohmflowError):
    """Newton iteration for a nodal point did not converge."""


class DegenerateXPoint(BohmflowError):
    """X-point closed form undefined for this (t, R)."""


class ClassificationAmbiguous(BohmflowError):
    """Manifold branch approaching the node could not be labelled."""


class NonPositiveDeviation(BohmflowError, ValueError):
    """Deviation norms must be strictly positive."""


class DegenerateFit(BohmflowError, ValueError):
    """Power-law fit needs at least two distinct abscissae."""


class UnknownExperiment(BohmflowError, KeyError):
    """Experiment name not registered."""

    def __str__(self) -> str:
        return self.args[0] if self.args else ""


def require(condition: bool, message: str, error: type = ValueError, **context: Optional[Any]) -> None:
    """Raise `error` with context when `condition` is false."""
    if not condition:
        if issubclass(error, BohmflowError):
            raise error(message, **context)
        raise error(message)


class ExperimentFailed(BohmflowError):
    """A numeric failure inside an experiment pipeline, tagged with the experiment name."""
