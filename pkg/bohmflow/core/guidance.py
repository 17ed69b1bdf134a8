"""
Guidance Flow - Bohmian velocity field and trajectory integration
Generic velocity (hbar/m) Im(grad Psi / Psi) from any superposition, the closed
form for the base state, the analytic velocity Jacobian, and trajectory /
deviation-vector integration through the singular flow near nodes.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from bohmflow.config.config_manager import config as runtime_config
from bohmflow.core.errors import ConfigError, NearNode, require
from bohmflow.core.integrator import DormandPrince54, block_scale, rms_scale, sample_grid
from bohmflow.core.wavefunction import DEFAULT_CONFIG, OscillatorConfig, Superposition, psi_jet


# ============= Domain Types =============

@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    t: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape != (3,) or not np.all(np.isfinite(x)) or not math.isfinite(self.t):
            raise ValueError(f"phase point needs a finite 3-vector and time, got x={self.x}, t={self.t}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class BaseFlowCoefficients:
    """Closed-form velocity of the base state: v = diag(hbar/m) A x / G."""

    A: np.ndarray
    G: float


@dataclass(frozen=True)
class IntegratorSettings:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = 0.1
    min_step: float = 1e-12
    node_guard: float = 1e-12
    deviation_renorm_threshold: float = 1e8
    step_safety: float = 0.1
    output_interval: float = 0.01
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not 0 < self.min_step < self.max_step:
            raise ValueError(f"need 0 < min_step < max_step, got {self.min_step}, {self.max_step}")
        for name in ("rel_tol", "abs_tol", "node_guard", "deviation_renorm_threshold",
                     "step_safety", "output_interval"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def from_config(cls, **overrides: Any) -> "IntegratorSettings":
        """Build from the `integrator` config section; keyword overrides win."""
        unknown = sorted(set(overrides) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"unknown {cls.__name__} keys: {', '.join(unknown)}")
        values = {k: v for k, v in runtime_config.get_section("integrator").items()
                  if k in cls.__dataclass_fields__}
        values.update(overrides)
        values["max_steps"] = int(values.get("max_steps", cls.max_steps))
        return cls(**{k: (v if k == "max_steps" else float(v)) for k, v in values.items()})


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    radius: np.ndarray = field(init=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if times.size != positions.shape[0]:
            raise ValueError("times and positions differ in length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "radius", np.linalg.norm(positions, axis=1))

    def __len__(self) -> int:
        return self.times.size

    def window(self, t_start: float, t_end: float) -> "Trajectory":
        mask = (self.times >= t_start) & (self.times <= t_end)
        return Trajectory(self.times[mask], self.positions[mask])

    def as_table(self) -> Tuple[str, np.ndarray]:
        return "t,x1,x2,x3,R", np.column_stack([self.times, self.positions, self.radius])


@dataclass(frozen=True)
class DeviationLog:
    """
    Norm history of the linearized deviation vector on a uniform grid.

    `norms` are the stored (possibly renormalized) norms; `log_scales` the
    accumulated log of all renormalization factors applied before each sample.
    """

    tau: float
    times: np.ndarray
    norms: np.ndarray
    log_scales: np.ndarray
    renorm_events: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if np.any(np.asarray(self.norms) <= 0):
            raise ValueError("deviation norms must be positive")

    @property
    def log_xi(self) -> np.ndarray:
        """ln of the un-renormalized norm at each sample."""
        return np.log(self.norms) + self.log_scales

    @property
    def xi(self) -> np.ndarray:
        return np.exp(self.log_xi)

    def as_table(self) -> Tuple[str, np.ndarray]:
        raw = np.concatenate([[np.nan], np.diff(self.log_xi)])
        return "t,xi,stretching_raw", np.column_stack([self.times, self.xi, raw])


# ============= Velocity Field =============

class GuidanceField:
    """
    Velocity field of one superposition with its node guard.

    The guard compares the reduced density |Psi / Psi_000|^2 (for the base
    state equal to 2G/3) against `node_guard`, which keeps the threshold
    meaningful far out in the Gaussian tail.
    """

    def __init__(self, state: Superposition, node_guard: float = 1e-12):
        self.state = state
        self.node_guard = node_guard
        config = state.config
        self._scale = config.velocity_scale
        self._alphas = config.alphas
        self._ground = float(np.prod((self._alphas / math.pi) ** 0.25))

    def _ground_amplitude(self, x: np.ndarray) -> float:
        return self._ground * math.exp(-0.5 * float(self._alphas @ (x * x)))

    def reduced_density(self, t: float, x: np.ndarray) -> float:
        value, _, _ = psi_jet(self.state, x, t, order=0)
        return abs(value / self._ground_amplitude(x)) ** 2

    def is_admissible(self, t: float, x: np.ndarray) -> bool:
        return self.reduced_density(t, x[:3]) >= self.node_guard

    def _check(self, t: float, x: np.ndarray, value: complex) -> None:
        ground = self._ground_amplitude(x)
        if abs(value / ground) ** 2 < self.node_guard:
            raise NearNode("|Psi|^2 below node guard", t=t, x=x)

    def velocity(self, t: float, x: np.ndarray) -> np.ndarray:
        value, gradient, _ = psi_jet(self.state, x, t, order=1)
        self._check(t, x, value)
        return self._scale * np.imag(gradient / value)

    def velocity_and_jacobian(self, t: float, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        value, gradient, hessian = psi_jet(self.state, x, t, order=2)
        self._check(t, x, value)
        ratio = gradient / value
        velocity = self._scale * np.imag(ratio)
        jacobian = self._scale[:, None] * np.imag(hessian / value - np.outer(ratio, ratio))
        return velocity, jacobian

    def node_distance(self, t: float, x: np.ndarray) -> float:
        """First-order distance to the nodal line, |Psi| / |grad Psi|."""
        value, gradient, _ = psi_jet(self.state, x, t, order=1)
        norm = float(np.linalg.norm(gradient))
        return abs(value) / norm if norm > 0 else math.inf


def bohmian_velocity(state: Superposition, p: PhasePoint, node_guard: float = 1e-12) -> np.ndarray:
    """
    (hbar/m) Im(grad Psi / Psi) per axis.

    Raises:
        NearNode: If |Psi|^2 (reduced) is below node_guard
    """
    return GuidanceField(state, node_guard).velocity(p.t, p.x)


def velocity_jacobian(state: Superposition, p: PhasePoint, node_guard: float = 1e-12) -> np.ndarray:
    """Analytic spatial Jacobian dv_i/dx_j from second derivatives of Psi."""
    return GuidanceField(state, node_guard).velocity_and_jacobian(p.t, p.x)[1]


def base_flow_coefficients(p: PhasePoint, config: OscillatorConfig = DEFAULT_CONFIG) -> BaseFlowCoefficients:
    """A_ij = sqrt(a_i a_j) sin(w_ji t) and G = |sum_k sqrt(a_k) x_k exp(-i w_k t)|^2."""
    roots = np.sqrt(config.alphas)
    omegas = config.omegas
    A = np.zeros((3, 3))
    for i in range(3):
        for j in range(i + 1, 3):
            A[i, j] = roots[i] * roots[j] * math.sin((omegas[j] - omegas[i]) * p.t)
            A[j, i] = -A[i, j]
    y = roots * p.x
    amplitude = np.sum(y * np.exp(-1j * omegas * p.t))
    return BaseFlowCoefficients(A=A, G=float(abs(amplitude) ** 2))


def closed_form_velocity(p: PhasePoint, config: OscillatorConfig = DEFAULT_CONFIG,
                         node_guard: float = 1e-12) -> np.ndarray:
    """
    x_i' = (1/G) sum_{j != i} sqrt(w_j w_i) sin(w_ji t) x_j for the base state.

    Raises:
        NearNode: If G < node_guard
    """
    coefficients = base_flow_coefficients(p, config)
    if coefficients.G < node_guard:
        raise NearNode("G below node guard", t=p.t, x=p.x)
    return config.velocity_scale * (coefficients.A @ p.x) / coefficients.G


# ============= Integration =============

def _geometric_cap(field_: GuidanceField, safety: float):
    def cap(t: float, y: np.ndarray, f: np.ndarray) -> float:
        speed = float(np.linalg.norm(f[:3]))
        if speed == 0.0:
            return math.inf
        return safety * field_.node_distance(t, y[:3]) / speed
    return cap


def integrate(state: Superposition, x0: Sequence[float], t0: float, t1: float,
              settings: Optional[IntegratorSettings] = None) -> Trajectory:
    """
    Integrate a Bohmian trajectory on the output grid t0 + k*output_interval.

    Raises:
        NearNode: If x0 lies inside the node guard at t0
        NodeCollision: If step control cannot keep clear of a node
        StepUnderflow: If the required step drops below min_step
    """
    settings = settings or IntegratorSettings.from_config()
    require(t1 >= t0, f"t1 must not precede t0 ({t0} -> {t1})")
    x0 = PhasePoint(x0, t0).x
    field_ = GuidanceField(state, settings.node_guard)
    if not field_.is_admissible(t0, x0):
        raise NearNode("initial point inside the node guard", t=t0, x=x0)

    if t1 == t0:
        return Trajectory(np.array([t0]), x0[None, :])

    times = sample_grid(t0, t1, settings.output_interval)
    positions: List[np.ndarray] = []

    stepper = DormandPrince54(
        field_.velocity,
        max_step=settings.max_step,
        min_step=settings.min_step,
        max_steps=settings.max_steps,
        error_scale=rms_scale(settings.abs_tol, settings.rel_tol),
        step_cap=_geometric_cap(field_, settings.step_safety),
        admissible=field_.is_admissible,
    )
    logger.debug(f"Integrating trajectory from x0={x0} over [{t0}, {t1}]")
    stepper.solve(t0, x0, t1, times, lambda t, y: positions.append(y))
    return Trajectory(times, np.array(positions))


def integrate_with_deviation(state: Superposition, x0: Sequence[float], dx0: Sequence[float],
                             t0: float, t1: float, tau: float,
                             settings: Optional[IntegratorSettings] = None
                             ) -> Tuple[Trajectory, DeviationLog]:
    """
    Co-integrate a trajectory and its variational deviation d(dx)/dt = J dx.

    The deviation is sampled every tau; when its norm exceeds
    deviation_renorm_threshold it is rescaled to unit length and the factor
    is logged, so ln(xi) is reconstructed exactly. The deviation block is
    error-controlled relative to its own norm, which makes the step sequence
    independent of the renormalization threshold.
    """
    settings = settings or IntegratorSettings.from_config()
    dx0 = np.asarray(dx0, dtype=float)
    require(dx0.shape == (3,) and np.linalg.norm(dx0) > 0, "deviation vector must be non-zero")
    require(tau > 0, f"sampling interval tau must be positive, got {tau}")
    require(t1 >= t0, f"t1 must not precede t0 ({t0} -> {t1})")
    x0 = PhasePoint(x0, t0).x
    field_ = GuidanceField(state, settings.node_guard)
    if not field_.is_admissible(t0, x0):
        raise NearNode("initial point inside the node guard", t=t0, x=x0)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        velocity, jacobian = field_.velocity_and_jacobian(t, y[:3])
        return np.concatenate([velocity, jacobian @ y[3:]])

    def deviation_scale(d_old: np.ndarray, d_new: np.ndarray) -> np.ndarray:
        size = max(np.linalg.norm(d_old), np.linalg.norm(d_new))
        return np.full(3, settings.rel_tol * size)

    state_log: Dict[str, Any] = {"log_scale": 0.0, "events": []}

    def renormalize(t: float, y: np.ndarray) -> Optional[np.ndarray]:
        norm = float(np.linalg.norm(y[3:]))
        if norm <= settings.deviation_renorm_threshold:
            return None
        state_log["log_scale"] += math.log(norm)
        state_log["events"].append((t, norm))
        logger.debug(f"Deviation renormalized at t={t:.6g} by {norm:.6e}")
        y = y.copy()
        y[3:] /= norm
        return y

    times = sample_grid(t0, t1, tau, include_end=False)
    positions: List[np.ndarray] = []
    norms: List[float] = []
    log_scales: List[float] = []

    def on_sample(t: float, y: np.ndarray) -> None:
        positions.append(y[:3])
        norms.append(float(np.linalg.norm(y[3:])))
        log_scales.append(state_log["log_scale"])

    y0 = np.concatenate([x0, dx0])
    if t1 > t0:
        stepper = DormandPrince54(
            rhs,
            max_step=settings.max_step,
            min_step=settings.min_step,
            max_steps=settings.max_steps,
            error_scale=block_scale([rms_scale(settings.abs_tol, settings.rel_tol), deviation_scale], [3, 3]),
            step_cap=_geometric_cap(field_, settings.step_safety),
            admissible=field_.is_admissible,
            after_step=renormalize,
        )
        stepper.solve(t0, y0, t1, times, on_sample)
    else:
        on_sample(t0, y0)

    trajectory = Trajectory(times, np.array(positions))
    deviation = DeviationLog(
        tau=float(tau),
        times=times,
        norms=np.array(norms),
        log_scales=np.array(log_scales),
        renorm_events=tuple(state_log["events"]),
    )
    return trajectory, deviation
