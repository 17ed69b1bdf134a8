"""
Chaos Metrics - stretching numbers, finite-time LCN and scattering events
All transforms are pure functions of the deviation-norm history sampled every tau.
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from bohmflow.config.config_manager import config as runtime_config
from bohmflow.core.errors import ConfigError, DegenerateFit, NonPositiveDeviation
from bohmflow.core.guidance import DeviationLog


# ============= Domain Types =============

@dataclass(frozen=True)
class StretchingSeries:
    """a_k = ln(xi_{k+1} / xi_k); a_k belongs to time t0 + (k+1) tau."""

    tau: float
    values: np.ndarray
    t0: float = 0.0

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.tau * np.arange(1, self.values.size + 1)


@dataclass(frozen=True)
class LcnSeries:
    times: np.ndarray
    chi: np.ndarray


@dataclass(frozen=True)
class ScatteringEvent:
    t_jump: float
    peak_a: float
    min_distance: float
    t_min_distance: float
    alignment: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class ScatteringSettings:
    background_window: float = 1.0
    jump_factor: float = 10.0

    @classmethod
    def from_config(cls, **overrides: Any) -> "ScatteringSettings":
        unknown = sorted(set(overrides) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"unknown {cls.__name__} keys: {', '.join(unknown)}")
        values = {k: float(v) for k, v in runtime_config.get_section("scattering").items()
                  if k in cls.__dataclass_fields__}
        values.update(overrides)
        return cls(**values)


# ============= Operations =============

def stretching_series(xi: Sequence[float], tau: float, t0: float = 0.0) -> StretchingSeries:
    """
    Elementwise log-ratios of successive deviation norms.

    Raises:
        NonPositiveDeviation: If any norm is <= 0
    """
    xi = np.asarray(xi, dtype=float)
    if not tau > 0:
        raise ValueError(f"sampling interval tau must be positive, got {tau}")
    if np.any(xi <= 0):
        index = int(np.argmax(xi <= 0))
        raise NonPositiveDeviation("deviation norms must be positive", step=index)
    return StretchingSeries(tau=float(tau), values=np.diff(np.log(xi)), t0=float(t0))


def stretching_series_from_log(log_xi: Sequence[float], tau: float, t0: float = 0.0) -> StretchingSeries:
    """Same series from ln(xi), which stays finite across renormalizations."""
    if not tau > 0:
        raise ValueError(f"sampling interval tau must be positive, got {tau}")
    return StretchingSeries(tau=float(tau), values=np.diff(np.asarray(log_xi, dtype=float)),
                            t0=float(t0))


def stretching_from_deviation(log: DeviationLog) -> StretchingSeries:
    return stretching_series_from_log(log.log_xi, log.tau, float(log.times[0]))


def cumulative_stretching(s: StretchingSeries) -> np.ndarray:
    return np.cumsum(s.values)


def finite_time_lcn(s: StretchingSeries) -> LcnSeries:
    """chi at t0 + (k+1) tau is (a_0 + ... + a_k) / ((k+1) tau)."""
    if len(s) == 0:
        raise ValueError("finite-time LCN needs a non-empty stretching series")
    elapsed = s.tau * np.arange(1, len(s) + 1)
    return LcnSeries(times=s.times, chi=np.cumsum(s.values) / elapsed)


def rolling_background(values: np.ndarray, window: int) -> np.ndarray:
    """
    Trailing median of |a| over the `window` samples before each index.

    Indices with fewer than max(1, window // 4) preceding samples get NaN.
    """
    magnitudes = np.abs(values)
    background = np.full(values.size, np.nan)
    min_periods = max(1, window // 4)
    for k in range(min_periods, values.size):
        background[k] = np.median(magnitudes[max(0, k - window):k])
    return background


def _merge_runs(indices: np.ndarray, gap: int) -> List[np.ndarray]:
    if indices.size == 0:
        return []
    breaks = np.where(np.diff(indices) > gap)[0] + 1
    return np.split(indices, breaks)


def detect_scattering(s: StretchingSeries, distance: Optional[Sequence[float]] = None,
                      background_window: float = 1.0, jump_factor: float = 10.0) -> List[ScatteringEvent]:
    """
    Flag a_k > jump_factor * background and merge flags into events.

    The first max(1, window // 4) samples have no background yet and are
    never flagged. Flags closer than one background window are one event;
    its t_jump is the time of the largest a_k in the run. `distance` is sampled on the
    same grid as the stretching values (or on the xi grid, one longer);
    the event records the distance minimum within one window of t_jump.
    """
    values = s.values
    window = max(1, int(round(background_window / s.tau)))
    background = rolling_background(values, window)
    with np.errstate(invalid="ignore"):
        flagged = np.where((values > 0) & (values > jump_factor * background))[0]

    times = s.times
    if distance is not None:
        distance = np.asarray(distance, dtype=float)
        if distance.size == values.size + 1:
            distance = distance[1:]
        if distance.size != values.size:
            raise ValueError(f"distance series has {distance.size} samples, expected {values.size}")

    events = []
    for run in _merge_runs(flagged, window):
        peak = int(run[np.argmax(values[run])])
        t_jump = float(times[peak])
        if distance is None:
            min_distance, t_min = math.nan, math.nan
        else:
            lo, hi = max(0, peak - window), min(values.size, peak + window + 1)
            local_distance = distance[lo:hi]
            if np.all(np.isnan(local_distance)):
                min_distance, t_min = math.nan, math.nan
            else:
                local = lo + int(np.nanargmin(local_distance))
                min_distance, t_min = float(distance[local]), float(times[local])
        events.append(ScatteringEvent(t_jump=t_jump, peak_a=float(values[peak]),
                                      min_distance=min_distance, t_min_distance=t_min,
                                      alignment=abs(t_jump - t_min)))
    logger.debug(f"Scattering detection: {flagged.size} flagged samples, {len(events)} events")
    return events


def lcn_decay_slope(lcn: LcnSeries, t_start: float, t_end: float) -> float:
    """
    Log-log slope of chi(t) over [t_start, t_end]; about -1 for ordered motion.

    Raises:
        DegenerateFit: If fewer than two positive chi samples lie in the window
    """
    mask = (lcn.times >= t_start) & (lcn.times <= t_end) & (lcn.chi > 0)
    if np.count_nonzero(mask) < 2:
        raise DegenerateFit("not enough positive chi samples for a decay slope",
                            t=t_start, step=int(np.count_nonzero(mask)))
    slope, _ = np.polyfit(np.log(lcn.times[mask]), np.log(lcn.chi[mask]), 1)
    return float(slope)


# ============= Export =============

def metrics_table(s: StretchingSeries, distance: Optional[Sequence[float]] = None) -> Tuple[str, np.ndarray]:
    """Columns t,a,cumulative,chi,distance (distance NaN when absent)."""
    lcn = finite_time_lcn(s)
    if distance is None:
        column = np.full(len(s), np.nan)
    else:
        column = np.asarray(distance, dtype=float)
        if column.size == len(s) + 1:
            column = column[1:]
    return "t,a,cumulative,chi,distance", np.column_stack(
        [s.times, s.values, cumulative_stretching(s), lcn.chi, column])


def events_to_json(events: Sequence[ScatteringEvent]) -> List[Dict[str, float]]:
    return [event.to_dict() for event in events]
