"""
Invariant Manifolds - frozen-time phase portraits of the nodal point / X-point complex
Traces the four asymptotic curves of an X-point through the frozen planar flow,
labels which of them spirals into the nodal point, and locates the times at
which that label changes (Hopf-type transitions).
"""

import math
from dataclasses import dataclass, replace
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.integrate import solve_ivp

from bohmflow.config.config_manager import config as runtime_config
from bohmflow.core.errors import ClassificationAmbiguous, ConfigError, DegenerateTime, DegenerateXPoint, require
from bohmflow.core.nodal import PlanarFlow, XPoint, planar_field, planar_flow, xpoint_from_flow
from bohmflow.core.wavefunction import DEFAULT_CONFIG, OscillatorConfig

BRANCHES = ("unstable+", "unstable-", "stable+", "stable-")
STABLE = "stable"
UNSTABLE = "unstable"


# ============= Domain Types =============

@dataclass(frozen=True)
class ManifoldSettings:
    seed: float = 1e-5
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    arc_length_factor: float = 60.0
    capture_fraction: float = 1e-3
    box_factor: float = 2.0
    s_max: float = 1e4
    min_turns: int = 2
    tolerance: float = 1e-3

    def __post_init__(self):
        if not self.seed > 0:
            raise ValueError(f"seed displacement must be positive, got {self.seed}")
        if not 0 < self.capture_fraction < 1:
            raise ValueError(f"capture_fraction must lie in (0, 1), got {self.capture_fraction}")

    @classmethod
    def from_config(cls, **overrides: Any) -> "ManifoldSettings":
        """Build from the `manifold` and `hopf` config sections."""
        unknown = sorted(set(overrides) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"unknown {cls.__name__} keys: {', '.join(unknown)}")
        values = {k: v for k, v in runtime_config.get_section("manifold").items()
                  if k in cls.__dataclass_fields__}
        values.update({k: v for k, v in runtime_config.get_section("hopf").items()
                       if k in cls.__dataclass_fields__})
        values.update(overrides)
        values["min_turns"] = int(values.get("min_turns", cls.min_turns))
        return cls(**{k: (v if k == "min_turns" else float(v)) for k, v in values.items()})


@dataclass(frozen=True)
class ManifoldCurve:
    """
    One asymptotic curve of an X-point in the frozen flow.

    `points` rows are (s, u', v'); s runs forward for unstable branches and
    backward for stable ones. `termination` is one of node, box,
    arc_length, s_max or failed.
    """

    branch: str
    frozen_t: float
    R: float
    points: np.ndarray
    termination: str
    arc_length: float

    @property
    def kind(self) -> str:
        return self.branch.rstrip("+-")

    @property
    def uv(self) -> np.ndarray:
        return self.points[:, 1:]

    def as_table(self) -> Tuple[str, np.ndarray]:
        return "s,u,v", self.points


@dataclass(frozen=True)
class SpiralProfile:
    turns: float
    radii: np.ndarray

    @property
    def approaches(self) -> bool:
        """Radius decreasing from turn to turn."""
        if self.radii.size < 2:
            return False
        slope = np.polyfit(np.arange(self.radii.size), np.log(self.radii), 1)[0]
        return bool(slope < 0 and self.radii[-1] < self.radii[0])


@dataclass(frozen=True)
class ComplexClassification:
    t: float
    R: float
    label: str
    branch: str
    turns: float


@dataclass(frozen=True)
class HopfTransition:
    t_star: float
    before: str
    after: str
    bracket: Tuple[float, float]

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]


# ============= Tracing =============

def _seed_vector(xp: XPoint, branch: str) -> np.ndarray:
    if branch not in BRANCHES:
        raise ValueError(f"unknown manifold branch {branch!r}; expected one of {BRANCHES}")
    vector = xp.unstable_vector if branch.startswith(UNSTABLE) else xp.stable_vector
    return vector if branch.endswith("+") else -vector


def _integrate_frozen(pf: PlanarFlow, start: np.ndarray, direction: float, scale: float,
                      settings: ManifoldSettings) -> Tuple[np.ndarray, str, float]:
    """Frozen-flow orbit from `start` with node-capture, box and arc-length stops."""

    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        F = planar_field(pf, y[:2])
        if not np.all(np.isfinite(F)):
            return np.zeros(3)
        return np.array([F[0], F[1], math.hypot(F[0], F[1])])

    def captured(s, y):
        return math.hypot(y[0], y[1]) - settings.capture_fraction * scale

    def escaped(s, y):
        return settings.box_factor * pf.R - max(abs(y[0]), abs(y[1]))

    def exhausted(s, y):
        return settings.arc_length_factor * scale - y[2]

    events = [captured, escaped, exhausted]
    for event in events:
        event.terminal = True
        event.direction = -1

    solution = solve_ivp(rhs, (0.0, direction * settings.s_max), [start[0], start[1], 0.0],
                         method="DOP853", rtol=settings.rel_tol, atol=settings.abs_tol,
                         events=events)
    if solution.status == 1:
        fired = [i for i, times in enumerate(solution.t_events) if len(times)]
        termination = ("node", "box", "arc_length")[fired[0]]
    elif solution.status == 0:
        termination = "s_max"
    else:
        logger.warning(f"Frozen flow at t={pf.t}, R={pf.R} failed: {solution.message}")
        termination = "failed"
    points = np.column_stack([solution.t, solution.y[0], solution.y[1]])
    return points, termination, float(solution.y[2, -1])


def trace_branch(pf: PlanarFlow, xp: XPoint, branch: str,
                 settings: Optional[ManifoldSettings] = None, reverse: bool = False) -> ManifoldCurve:
    """
    Integrate the frozen flow from X + seed * e along one eigen-direction.

    Unstable branches run forward in s and stable branches backward;
    `reverse` flips that direction. Tracing stops on node capture, on leaving
    the box |u'|, |v'| <= box_factor * R, or at the arc-length cap.
    """
    settings = settings or ManifoldSettings.from_config()
    direction = 1.0 if branch.startswith(UNSTABLE) else -1.0
    if reverse:
        direction = -direction
    start = np.array([xp.u, xp.v]) + settings.seed * _seed_vector(xp, branch)
    points, termination, arc = _integrate_frozen(pf, start, direction, xp.distance_to_node, settings)
    return ManifoldCurve(branch=branch, frozen_t=pf.t, R=pf.R, points=points,
                         termination=termination, arc_length=arc)


def trace_streamline(pf: PlanarFlow, xp: XPoint, start: Sequence[float],
                     settings: Optional[ManifoldSettings] = None) -> np.ndarray:
    """Frozen-flow orbit through `start`, backward then forward, as rows (s, u', v')."""
    settings = settings or ManifoldSettings.from_config()
    start = np.asarray(start, dtype=float)
    scale = xp.distance_to_node
    backward, _, _ = _integrate_frozen(pf, start, -1.0, scale, settings)
    forward, _, _ = _integrate_frozen(pf, start, 1.0, scale, settings)
    return np.vstack([backward[::-1], forward[1:]])


def manifold_trace(t: float, R: float, branch: str, seed: Optional[float] = None,
                   settings: Optional[ManifoldSettings] = None,
                   config: OscillatorConfig = DEFAULT_CONFIG) -> ManifoldCurve:
    """
    Trace one asymptotic curve of the X-point at (t, R).

    Raises:
        DegenerateTime: If the nodal direction is undefined at t
        DegenerateXPoint: If the X-point does not exist
    """
    settings = settings or ManifoldSettings.from_config()
    if seed is not None:
        settings = replace(settings, seed=seed)
    pf = planar_flow(t, R, config)
    return trace_branch(pf, xpoint_from_flow(pf), branch, settings)


def trace_all(pf: PlanarFlow, xp: XPoint,
              settings: Optional[ManifoldSettings] = None) -> List[ManifoldCurve]:
    return [trace_branch(pf, xp, branch, settings) for branch in BRANCHES]


# ============= Classification =============

def spiral_profile(curve: ManifoldCurve) -> SpiralProfile:
    """Winding of a curve around the nodal point and its radius at each full turn."""
    uv = curve.uv
    angles = np.unwrap(np.arctan2(uv[:, 1], uv[:, 0]))
    swept = np.abs(angles - angles[0])
    radius = np.hypot(uv[:, 0], uv[:, 1])
    turns = float(swept.max() / (2.0 * math.pi)) if swept.size else 0.0

    radii = [radius[0]]
    for k in range(1, int(turns) + 1):
        index = int(np.argmax(swept >= 2.0 * math.pi * k))
        lo = max(index - 1, 0)
        span = swept[index] - swept[lo]
        w = (2.0 * math.pi * k - swept[lo]) / span if span > 0 else 1.0
        radii.append((1 - w) * radius[lo] + w * radius[index])
    return SpiralProfile(turns=turns, radii=np.array(radii))


def classify_curves(curves: Sequence[ManifoldCurve], t: float, R: float,
                    min_turns: int = 2) -> ComplexClassification:
    """
    Label the complex by the kind of the branch that spirals into the node.

    Raises:
        ClassificationAmbiguous: If no branch qualifies or the candidates disagree
    """
    candidates = []
    for curve in curves:
        profile = spiral_profile(curve)
        if profile.turns >= min_turns and profile.approaches:
            candidates.append((profile.turns, curve))
    if not candidates:
        raise ClassificationAmbiguous("no manifold branch spirals into the node", t=t, layer=R)
    kinds = {curve.kind for _, curve in candidates}
    if len(kinds) > 1:
        raise ClassificationAmbiguous("stable and unstable branches both approach the node",
                                      t=t, layer=R)
    turns, curve = max(candidates, key=lambda item: item[0])
    return ComplexClassification(t=t, R=R, label=curve.kind, branch=curve.branch, turns=turns)


def classify_complex(t: float, R: float, settings: Optional[ManifoldSettings] = None,
                     config: OscillatorConfig = DEFAULT_CONFIG) -> ComplexClassification:
    """Trace all four branches at (t, R) and classify the complex."""
    settings = settings or ManifoldSettings.from_config()
    pf = planar_flow(t, R, config)
    curves = trace_all(pf, xpoint_from_flow(pf), settings)
    return classify_curves(curves, t, R, settings.min_turns)


def node_focus_index(pf: PlanarFlow, xp: XPoint, radius_fraction: float = 0.05,
                     rel_tol: float = 1e-11) -> float:
    """
    Relative radial change over one turn of the frozen flow started at
    r0 = radius_fraction * |X| on the ray towards the X-point, divided by
    (r0 / |X|)^2. Positive means the node repels (outward spiral in s).
    """
    scale = xp.distance_to_node
    r0 = radius_fraction * scale
    start = r0 * np.array([xp.u, xp.v]) / scale

    def rhs(s, y):
        F = planar_field(pf, y[:2])
        r2 = y[0] * y[0] + y[1] * y[1]
        return np.array([F[0], F[1], (y[0] * F[1] - y[1] * F[0]) / r2])

    def full_turn(s, y):
        return abs(y[2]) - 2.0 * math.pi

    full_turn.terminal = True
    full_turn.direction = 1
    # Near-node period scales like r0^2 / |B|
    horizon = 1e3 * (r0 * r0) * max(abs(pf.phi1), abs(pf.phi3), 1.0) / max(abs(pf.B), 1e-300)
    solution = solve_ivp(rhs, (0.0, horizon), [start[0], start[1], 0.0], method="DOP853",
                         rtol=rel_tol, atol=1e-14 * scale, events=[full_turn])
    if solution.status != 1:
        raise ClassificationAmbiguous("frozen flow did not complete a turn around the node",
                                      t=pf.t, layer=pf.R)
    end = solution.y_events[0][0]
    r1 = math.hypot(end[0], end[1])
    return float((r1 - r0) / r0 / radius_fraction ** 2)


def _label(t: float, R: float, settings: ManifoldSettings, config: OscillatorConfig) -> Optional[str]:
    try:
        return classify_complex(t, R, settings, config).label
    except (ClassificationAmbiguous, DegenerateXPoint, DegenerateTime) as e:
        logger.warning(f"Complex at t={t:.6f}, R={R} unlabelled: {e}")
        return None


def scan_labels(R: float, times: Sequence[float], settings: Optional[ManifoldSettings] = None,
                config: OscillatorConfig = DEFAULT_CONFIG) -> List[Optional[str]]:
    """Complex label at each time; None where the complex cannot be labelled."""
    settings = settings or ManifoldSettings.from_config()
    return [_label(float(t), R, settings, config) for t in times]


def locate_transitions(R: float, times: Sequence[float], labels: Sequence[Optional[str]],
                       settings: Optional[ManifoldSettings] = None,
                       config: OscillatorConfig = DEFAULT_CONFIG) -> List[HopfTransition]:
    """
    Bisect every label change between consecutive labelled samples down to
    settings.tolerance. An ambiguous midpoint is nudged by a quarter bracket
    either way; if both nudges are ambiguous too, bisection stops at the
    current bracket.
    """
    settings = settings or ManifoldSettings.from_config()
    labelled = [(float(t), label) for t, label in zip(times, labels) if label is not None]

    transitions = []
    for (lo, before), (hi, after) in zip(labelled[:-1], labelled[1:]):
        if before == after:
            continue
        while hi - lo > settings.tolerance:
            mid = 0.5 * (lo + hi)
            label = _label(mid, R, settings, config)
            if label is None:
                for nudged in (mid - 0.25 * (hi - lo), mid + 0.25 * (hi - lo)):
                    label = _label(nudged, R, settings, config)
                    if label is not None:
                        mid = nudged
                        break
            if label is None:
                logger.warning(f"Bisection stalled on unlabelled complexes in [{lo:.6f}, {hi:.6f}]")
                break
            if label == before:
                lo = mid
            else:
                hi = mid
        t_star = 0.5 * (lo + hi)
        logger.info(f"Hopf transition at t*={t_star:.6f} ({before} -> {after})")
        transitions.append(HopfTransition(t_star=t_star, before=before, after=after, bracket=(lo, hi)))
    return transitions


def scan_times(t_interval: Tuple[float, float], dt: float) -> np.ndarray:
    t_start, t_end = t_interval
    require(t_end > t_start and dt > 0, f"invalid scan interval {t_interval} with dt={dt}")
    times = np.arange(t_start, t_end, dt)
    if t_end - times[-1] > 1e-9 * dt:
        times = np.append(times, t_end)
    return times


def hopf_scan(R: float, t_interval: Tuple[float, float], dt: float,
              settings: Optional[ManifoldSettings] = None,
              config: OscillatorConfig = DEFAULT_CONFIG) -> List[HopfTransition]:
    """
    Locate stable/unstable label changes of the node-approaching branch.

    Samples t_interval every dt, then bisects each change of label.
    """
    settings = settings or ManifoldSettings.from_config()
    times = scan_times(t_interval, dt)
    labels = scan_labels(R, times, settings, config)
    logger.info(f"Hopf scan R={R}: {sum(label is not None for label in labels)}/{len(times)} samples labelled")
    return locate_transitions(R, times, labels, settings, config)
