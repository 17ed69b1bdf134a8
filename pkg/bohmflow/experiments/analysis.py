"""
Analysis - post-processing shared by the experiment pipelines
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from bohmflow.core.errors import DegenerateFit
from bohmflow.core.guidance import Trajectory


@dataclass(frozen=True)
class PowerLawFit:
    """y ~ c x^p fitted by least squares on (ln x, ln y); residual is the RMS in ln y."""

    exponent: float
    prefactor: float
    residual: float

    def predict(self, x):
        return self.prefactor * np.power(x, self.exponent)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def fit_power_law(points: Sequence[Tuple[float, float]]) -> PowerLawFit:
    """
    Raises:
        ValueError: With fewer than two points or non-positive coordinates
        DegenerateFit: If all abscissae are equal
    """
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    if data.shape[0] < 2:
        raise ValueError(f"a power-law fit needs at least two points, got {data.shape[0]}")
    if np.any(data <= 0) or not np.all(np.isfinite(data)):
        raise ValueError("power-law fit needs finite positive coordinates")
    log_x, log_y = np.log(data[:, 0]), np.log(data[:, 1])
    if np.ptp(log_x) == 0:
        raise DegenerateFit("all abscissae are equal", step=data.shape[0])
    slope, intercept = np.polyfit(log_x, log_y, 1)
    residual = math.sqrt(float(np.mean((log_y - (slope * log_x + intercept)) ** 2)))
    return PowerLawFit(exponent=float(slope), prefactor=math.exp(intercept), residual=residual)


def delta_r_max(trajectory: Trajectory, t_start: Optional[float] = None,
                t_end: Optional[float] = None) -> float:
    """max R(t) - min R(t) over [t_start, t_end] (whole trajectory by default)."""
    if len(trajectory) == 0:
        raise ValueError("delta_r_max needs a non-empty trajectory")
    radius = trajectory.radius
    if t_start is not None or t_end is not None:
        lo = -math.inf if t_start is None else t_start
        hi = math.inf if t_end is None else t_end
        radius = radius[(trajectory.times >= lo) & (trajectory.times <= hi)]
        if radius.size == 0:
            raise ValueError(f"no trajectory samples in [{t_start}, {t_end}]")
    return float(radius.max() - radius.min())


def first_crossing(times: np.ndarray, values: np.ndarray, level: float) -> Optional[float]:
    """First time at which `values` reaches `level`, linearly interpolated; None if never."""
    above = np.where(values >= level)[0]
    if above.size == 0:
        return None
    k = int(above[0])
    if k == 0:
        return float(times[0])
    v0, v1 = values[k - 1], values[k]
    w = (level - v0) / (v1 - v0) if v1 != v0 else 1.0
    return float(times[k - 1] + w * (times[k] - times[k - 1]))
