"""
Nodal Structure - moving nodal lines, comoving frame, planar flow and X-points
Everything here is for the base state: the nodal line is the straight line
through the origin along y_k = sin(w_{..} t) / sqrt(a_k), the frame S(t) puts
its third axis on that line, and the tangent-plane flow around the nodal point
has a single hyperbolic companion point (the X-point).
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from bohmflow.core.errors import (
    ConfigError, DegenerateTime, DegenerateXPoint, NearNode, NoConvergence, require,
)
from bohmflow.core.wavefunction import DEFAULT_CONFIG, OscillatorConfig, Superposition, psi_jet

DEGENERATE_DIRECTION = 1e-12


# ============= Domain Types =============

@dataclass(frozen=True)
class NodalPoint:
    t: float
    R: float
    position: np.ndarray
    C: float
    velocity: np.ndarray
    acceleration: np.ndarray

    @property
    def direction(self) -> np.ndarray:
        return self.position / self.R

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


@dataclass(frozen=True)
class ComovingFrame:
    """Rotation S(t) with rows e_u', e_v' and the nodal direction."""

    theta: float
    phi: float
    S: np.ndarray

    def to_frame(self, x: np.ndarray, origin: np.ndarray) -> np.ndarray:
        return self.S @ (np.asarray(x, dtype=float) - origin)

    def to_lab(self, u: np.ndarray, origin: np.ndarray) -> np.ndarray:
        return origin + self.S.T @ np.asarray(u, dtype=float)


@dataclass(frozen=True)
class PlanarFlow:
    """
    Reduced tangent-plane flow around the nodal point,
    (F1, F2) = ((B/G) v' - V_u, -(B/G) u' - V_v) with G = P1 u'^2 + P2 u'v' + P3 v'^2.
    """

    t: float
    R: float
    B: float
    phi1: float
    phi2: float
    phi3: float
    V_u: float
    V_v: float
    node: NodalPoint = field(repr=False)
    frame: ComovingFrame = field(repr=False)

    def G(self, u, v):
        return self.phi1 * u * u + self.phi2 * u * v + self.phi3 * v * v

    def with_drift(self, V_u: float, V_v: float) -> "PlanarFlow":
        """Same rotation part with a replaced nodal drift."""
        return PlanarFlow(self.t, self.R, self.B, self.phi1, self.phi2, self.phi3,
                          V_u, V_v, self.node, self.frame)


@dataclass(frozen=True)
class XPoint:
    t: float
    R: float
    u: float
    v: float
    jacobian: np.ndarray
    eigenvalues: Tuple[float, float]
    eigenvectors: np.ndarray
    slopes: Tuple[float, float]

    @property
    def a(self) -> float:
        return float(self.jacobian[0, 0])

    @property
    def b(self) -> float:
        return float(self.jacobian[0, 1])

    @property
    def c(self) -> float:
        return float(self.jacobian[1, 0])

    @property
    def d(self) -> float:
        return float(self.jacobian[1, 1])

    @property
    def distance_to_node(self) -> float:
        return math.hypot(self.u, self.v)

    @property
    def unstable_vector(self) -> np.ndarray:
        return self.eigenvectors[0]

    @property
    def stable_vector(self) -> np.ndarray:
        return self.eigenvectors[1]


@dataclass(frozen=True)
class StructureLayer:
    R: float
    node: NodalPoint
    xpoint: Optional[XPoint]
    xpoint_lab: Optional[np.ndarray]
    error: Optional[str] = None
    manifolds: Tuple[Any, ...] = ()


@dataclass(frozen=True)
class NodalXStructure:
    t: float
    layers: Tuple[StructureLayer, ...]

    @property
    def node_positions(self) -> np.ndarray:
        return np.array([layer.node.position for layer in self.layers])

    @property
    def xline(self) -> np.ndarray:
        """Lab positions of all layers that have an X-point."""
        points = [layer.xpoint_lab for layer in self.layers if layer.xpoint_lab is not None]
        return np.array(points).reshape(-1, 3)


# ============= Nodal Line =============

def _frequency_differences(config: OscillatorConfig) -> np.ndarray:
    w = config.omegas
    return np.array([w[2] - w[1], w[0] - w[2], w[1] - w[0]])


def _direction_jet(t: float, config: OscillatorConfig):
    """Un-normalized nodal direction y(t) and its first two time derivatives."""
    diffs = _frequency_differences(config)
    roots = np.sqrt(config.alphas)
    y = np.sin(diffs * t) / roots
    dy = diffs * np.cos(diffs * t) / roots
    ddy = -diffs ** 2 * np.sin(diffs * t) / roots
    return y, dy, ddy


def nodal_direction(t: float, config: OscillatorConfig = DEFAULT_CONFIG,
                    reference: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Unit vector along the nodal line at time t.

    The branch with C > 0 is returned unless `reference` is given, in which
    case the sign closest to the reference (previous sample) is used.

    Raises:
        DegenerateTime: If all sin(w_ij t) vanish
    """
    y, _, _ = _direction_jet(t, config)
    norm = float(np.linalg.norm(y))
    if norm < DEGENERATE_DIRECTION:
        raise DegenerateTime("nodal direction undefined", t=t)
    n = y / norm
    if reference is not None and float(n @ reference) < 0.0:
        n = -n
    return n


def nodal_kinematics(t: float, R: float, config: OscillatorConfig = DEFAULT_CONFIG,
                     reference: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Analytic first and second time derivatives of R n(t)."""
    return _kinematics(t, R, config, reference)[1:3]


def _kinematics(t: float, R: float, config: OscillatorConfig, reference: Optional[np.ndarray]):
    if not R > 0:
        raise ValueError(f"sphere radius must be positive, got {R}")
    y, dy, ddy = _direction_jet(t, config)
    s = float(np.linalg.norm(y))
    if s < DEGENERATE_DIRECTION:
        raise DegenerateTime("nodal direction undefined", t=t)
    sign = 1.0
    if reference is not None and float(y @ reference) < 0.0:
        sign = -1.0

    ds = float(y @ dy) / s
    dds = (float(dy @ dy) + float(y @ ddy) - ds * ds) / s
    n = y / s
    dn = dy / s - y * ds / s ** 2
    ddn = ddy / s - 2.0 * dy * ds / s ** 2 - y * dds / s ** 2 + 2.0 * y * ds ** 2 / s ** 3
    return sign * R * n, sign * R * dn, sign * R * ddn, sign * R / s


def nodal_point(t: float, R: float, config: OscillatorConfig = DEFAULT_CONFIG,
                reference: Optional[np.ndarray] = None) -> NodalPoint:
    """
    Intersection of the nodal line with the sphere of radius R.

    Raises:
        DegenerateTime: If the nodal direction is undefined at t
    """
    position, velocity, acceleration, C = _kinematics(t, R, config, reference)
    return NodalPoint(t=float(t), R=float(R), position=position, C=C,
                      velocity=velocity, acceleration=acceleration)


def nodal_path(times: Sequence[float], R: float,
               config: OscillatorConfig = DEFAULT_CONFIG) -> List[NodalPoint]:
    """Nodal points along `times` with the sign kept continuous from the first sample."""
    points: List[NodalPoint] = []
    reference = None
    for t in times:
        point = nodal_point(t, R, config, reference)
        reference = point.direction
        points.append(point)
    return points


def _tangent_basis(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = x / np.linalg.norm(x)
    helper = np.eye(3)[int(np.argmin(np.abs(n)))]
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def nodal_point_numeric(state: Superposition, t: float, guess: Sequence[float],
                        tolerance: float = 1e-12, max_iterations: int = 50,
                        max_travel: float = 1.0) -> np.ndarray:
    """
    Damped Newton iteration for Re Psi = Im Psi = 0 on the sphere |x| = |guess|.

    Each step solves the 2x2 system in the tangent plane at the current
    iterate and maps back onto the sphere. Convergence is declared when the
    reduced residual |Psi / Psi_000| drops below `tolerance`, which bounds
    |Psi| by the same tolerance.

    Raises:
        NoConvergence: After max_iterations, on a singular Jacobian, or when
            the iterate wanders more than max_travel from the guess
    """
    x = np.asarray(guess, dtype=float).copy()
    radius = float(np.linalg.norm(x))
    require(radius > 0, "Newton guess must not be the origin")
    start = x.copy()
    alphas = state.config.alphas
    ground = float(np.prod((alphas / math.pi) ** 0.25))

    def reduced(point: np.ndarray):
        value, gradient, _ = psi_jet(state, point, t, order=1)
        scale = ground * math.exp(-0.5 * float(alphas @ (point * point)))
        return value / scale, gradient / scale

    value, gradient = reduced(x)
    for iteration in range(max_iterations):
        residual = abs(value)
        if residual < tolerance:
            logger.debug(f"Newton converged in {iteration} iterations at t={t}")
            return x

        e1, e2 = _tangent_basis(x)
        # d(Psi/g) = dPsi/g - (Psi/g) dg/g with dg/g = -alpha x dx
        g = gradient + value * alphas * x
        J = np.array([[np.real(g @ e1), np.real(g @ e2)],
                      [np.imag(g @ e1), np.imag(g @ e2)]])
        rhs = -np.array([value.real, value.imag])
        try:
            delta = np.linalg.solve(J, rhs)
        except np.linalg.LinAlgError as e:
            raise NoConvergence("singular Newton Jacobian", t=t, x=x) from e

        damping = 1.0
        while True:
            trial = x + damping * (delta[0] * e1 + delta[1] * e2)
            trial *= radius / np.linalg.norm(trial)
            trial_value, trial_gradient = reduced(trial)
            if abs(trial_value) < residual or damping < 1e-4:
                break
            damping *= 0.5

        x, value, gradient = trial, trial_value, trial_gradient
        if np.linalg.norm(x - start) > max_travel:
            raise NoConvergence("Newton iterate left the search region", t=t, x=x,
                                step=iteration + 1)

    raise NoConvergence("Newton iteration did not converge", t=t, x=x, step=max_iterations)


def follow_nodal_point(state: Superposition, times: Sequence[float],
                       guess: Sequence[float], **newton: Any) -> np.ndarray:
    """Chain nodal_point_numeric along `times`, seeding each solve with the previous root."""
    positions = []
    current = np.asarray(guess, dtype=float)
    for t in times:
        current = nodal_point_numeric(state, t, current, **newton)
        positions.append(current)
    return np.array(positions).reshape(-1, 3)


# ============= Comoving Frame =============

def frame_matrix(theta: float, phi: float) -> np.ndarray:
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    return np.array([
        [sp, -cp, 0.0],
        [ct * cp, ct * sp, -st],
        [st * cp, st * sp, ct],
    ])


def _frame_from_direction(n: np.ndarray, previous_phi: Optional[float]) -> ComovingFrame:
    theta = math.acos(min(1.0, max(-1.0, float(n[2]))))
    if math.hypot(n[0], n[1]) < 1e-14:
        phi = previous_phi if previous_phi is not None else 0.0
    else:
        phi = math.atan2(n[1], n[0]) % (2.0 * math.pi)
    return ComovingFrame(theta=theta, phi=phi, S=frame_matrix(theta, phi))


def comoving_frame(t: float, R: float, config: OscillatorConfig = DEFAULT_CONFIG,
                   reference: Optional[np.ndarray] = None,
                   previous_phi: Optional[float] = None) -> ComovingFrame:
    """
    Rotation carrying lab coordinates into the frame whose third axis is the
    nodal line. At the poles phi is carried over from `previous_phi`.
    """
    if not R > 0:
        raise ValueError(f"sphere radius must be positive, got {R}")
    return _frame_from_direction(nodal_direction(t, config, reference), previous_phi)


# ============= Planar Flow =============

def _require_equal_masses(config: OscillatorConfig) -> None:
    if not config.equal_masses:
        raise ConfigError("comoving reduction requires equal masses", masses=config.masses)


def flow_matrix(t: float, config: OscillatorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Antisymmetric A(t) with A_ij = sqrt(a_i a_j) sin((w_j - w_i) t)."""
    roots = np.sqrt(config.alphas)
    w = config.omegas
    return np.outer(roots, roots) * np.sin((w[None, :] - w[:, None]) * t)


def density_form(t: float, config: OscillatorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Q(t) with G = x^T Q x, Q_ij = sqrt(a_i a_j) cos((w_i - w_j) t)."""
    roots = np.sqrt(config.alphas)
    w = config.omegas
    return np.outer(roots, roots) * np.cos((w[:, None] - w[None, :]) * t)


def _displayed_coefficients(t: float, theta: float, phi: float, config: OscillatorConfig):
    """B and P1..P3 written out in theta, phi."""
    a1, a2, a3 = config.alphas
    w1, w2, w3 = config.omegas
    r12, r13, r23 = math.sqrt(a1 * a2), math.sqrt(a1 * a3), math.sqrt(a2 * a3)
    c12, c13, c23 = math.cos((w1 - w2) * t), math.cos((w1 - w3) * t), math.cos((w2 - w3) * t)
    s12, s13, s23 = math.sin((w1 - w2) * t), math.sin((w1 - w3) * t), math.sin((w2 - w3) * t)
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)

    B = -ct * r12 * s12 + st * sp * r13 * s13 - st * cp * r23 * s23
    phi1 = -r12 * c12 * math.sin(2 * phi) + a1 * sp ** 2 + a2 * cp ** 2
    phi2 = (2 * r23 * c23 * cp * st
            - 2 * r13 * c13 * sp * st
            + 2 * r12 * c12 * (-ct * cp ** 2 + ct * sp ** 2)
            + ct * math.sin(2 * phi) * (a1 - a2))
    phi3 = (-r23 * c23 * math.sin(2 * theta) * sp
            - r13 * c13 * math.sin(2 * theta) * cp
            + r12 * c12 * ct ** 2 * math.sin(2 * phi)
            + a1 * ct ** 2 * cp ** 2 + a2 * ct ** 2 * sp ** 2 + a3 * st ** 2)
    return B, phi1, phi2, phi3


def planar_flow(t: float, R: float, config: OscillatorConfig = DEFAULT_CONFIG,
                reference: Optional[np.ndarray] = None,
                previous_phi: Optional[float] = None) -> PlanarFlow:
    """
    Coefficients of the reduced planar flow at (t, R).

    Raises:
        DegenerateTime: If the nodal direction is undefined at t
        ConfigError: If the masses differ
    """
    _require_equal_masses(config)
    node = nodal_point(t, R, config, reference)
    frame = _frame_from_direction(node.direction, previous_phi)
    B, phi1, phi2, phi3 = _displayed_coefficients(t, frame.theta, frame.phi, config)
    V_u, V_v = frame.S[:2] @ node.velocity
    scale = float(config.velocity_scale[0])
    return PlanarFlow(t=float(t), R=float(R), B=scale * B, phi1=phi1, phi2=phi2, phi3=phi3,
                      V_u=float(V_u), V_v=float(V_v), node=node, frame=frame)


def frame_velocity(t: float, R: float, uvw: Sequence[float],
                   config: OscillatorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """
    Full comoving-frame field (1/G) S A S^T U' - S x_nod' at U' = (u', v', w').

    Raises:
        NearNode: If G vanishes at the mapped point
    """
    _require_equal_masses(config)
    node = nodal_point(t, R, config)
    frame = _frame_from_direction(node.direction, None)
    x = frame.to_lab(uvw, node.position)
    G = float(x @ density_form(t, config) @ x)
    if G <= 0.0:
        raise NearNode("G vanishes in the comoving frame", t=t, x=x)
    scale = float(config.velocity_scale[0])
    U = np.asarray(uvw, dtype=float)
    return scale * (frame.S @ flow_matrix(t, config) @ frame.S.T @ U) / G - frame.S @ node.velocity


def planar_velocity(pf: PlanarFlow, u: float, v: float, node_guard: float = 1e-12) -> Tuple[float, float]:
    """
    Frozen-time planar field (F1, F2) at (u', v').

    Raises:
        NearNode: If G(u', v') < node_guard
    """
    G = pf.G(u, v)
    if G < node_guard:
        raise NearNode("planar flow evaluated at the nodal point", t=pf.t, x=np.array([u, v]))
    ratio = pf.B / G
    return ratio * v - pf.V_u, -ratio * u - pf.V_v


def planar_field(pf: PlanarFlow, uv: np.ndarray) -> np.ndarray:
    """Vectorized (F1, F2) over an (..., 2) array; no node guard."""
    uv = np.asarray(uv, dtype=float)
    u, v = uv[..., 0], uv[..., 1]
    ratio = pf.B / pf.G(u, v)
    return np.stack([ratio * v - pf.V_u, -ratio * u - pf.V_v], axis=-1)


def planar_jacobian(pf: PlanarFlow, u: float, v: float) -> np.ndarray:
    G = pf.G(u, v)
    G_u = 2.0 * pf.phi1 * u + pf.phi2 * v
    G_v = pf.phi2 * u + 2.0 * pf.phi3 * v
    k = pf.B / (G * G)
    return np.array([
        [-k * v * G_u, pf.B / G - k * v * G_v],
        [-pf.B / G + k * u * G_u, k * u * G_v],
    ])


# ============= X-point =============

def _slope(vector: np.ndarray) -> float:
    if vector[0] == 0.0:
        return math.copysign(math.inf, vector[1])
    return float(vector[1] / vector[0])


def _eigenvector(J: np.ndarray, lam: float) -> np.ndarray:
    a, b = J[0]
    c, d = J[1]
    if abs(b) >= abs(c):
        vector = np.array([b, lam - a]) if abs(b) > 0 else np.array([lam - d, c])
    else:
        vector = np.array([lam - d, c])
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        vector, norm = np.array([1.0, 0.0]), 1.0
    vector = vector / norm
    if vector[0] < 0 or (vector[0] == 0 and vector[1] < 0):
        vector = -vector
    return vector


def xpoint_from_flow(pf: PlanarFlow, tolerance: float = 1e-14) -> XPoint:
    """
    X-point of a planar flow.

    With e = (V_v, -V_u)/|V| and q = e^T P e the solution is
    (u'_X, v'_X) = r e, r = -B / (|V| q); for V_v != 0 this is
    v'_X = -(V_u/V_v) u'_X with the closed-form u'_X.

    Raises:
        DegenerateXPoint: If |V|, q or B vanish
    """
    speed = math.hypot(pf.V_u, pf.V_v)
    scale = max(abs(pf.phi1), abs(pf.phi2), abs(pf.phi3), 1.0)
    if speed < tolerance * max(1.0, pf.R):
        raise DegenerateXPoint("nodal velocity vanishes in the tangent plane", t=pf.t, layer=pf.R)
    e = np.array([pf.V_v, -pf.V_u]) / speed
    q = float(pf.G(e[0], e[1]))
    if abs(q) < tolerance * scale:
        raise DegenerateXPoint("quadratic form vanishes along the X-point direction",
                               t=pf.t, layer=pf.R)
    if abs(pf.B) < tolerance * scale:
        raise DegenerateXPoint("rotation coefficient B vanishes", t=pf.t, layer=pf.R)
    r = -pf.B / (speed * q)
    u, v = float(r * e[0]), float(r * e[1])

    J = planar_jacobian(pf, u, v)
    trace = float(J[0, 0] + J[1, 1])
    det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    discriminant = trace * trace - 4.0 * det
    if discriminant < 0.0:
        raise DegenerateXPoint("X-point eigenvalues are complex", t=pf.t, layer=pf.R)
    root = math.sqrt(discriminant)
    lam1, lam2 = 0.5 * (trace + root), 0.5 * (trace - root)
    vectors = np.array([_eigenvector(J, lam1), _eigenvector(J, lam2)])
    b = float(J[0, 1])
    if abs(b) > tolerance * np.max(np.abs(J)):
        slopes = ((lam1 - J[0, 0]) / b, (lam2 - J[0, 0]) / b)
    else:
        slopes = (_slope(vectors[0]), _slope(vectors[1]))
    return XPoint(t=pf.t, R=pf.R, u=u, v=v, jacobian=J, eigenvalues=(lam1, lam2),
                  eigenvectors=vectors, slopes=(float(slopes[0]), float(slopes[1])))


def xpoint(t: float, R: float, config: OscillatorConfig = DEFAULT_CONFIG,
           reference: Optional[np.ndarray] = None) -> XPoint:
    """
    Closed-form X-point of the planar flow at (t, R) with its Jacobian,
    eigenvalues (unstable first) and unit eigenvectors oriented to u' >= 0.

    Raises:
        DegenerateTime: If the nodal direction is undefined at t
        DegenerateXPoint: If the closed form is undefined
    """
    return xpoint_from_flow(planar_flow(t, R, config, reference))


def xpoint_lab_position(pf: PlanarFlow, xp: XPoint) -> np.ndarray:
    """x_nod + S^T (u'_X, v'_X, 0)."""
    return pf.frame.to_lab([xp.u, xp.v, 0.0], pf.node.position)


# ============= Foliation =============

def foliation(t: float, R_grid: Sequence[float],
              config: OscillatorConfig = DEFAULT_CONFIG) -> NodalXStructure:
    """
    Nodal point and X-point of every layer in R_grid at time t.

    A layer whose X-point is degenerate keeps its nodal point and records the
    error instead of aborting the structure.
    """
    require(all(R > 0 for R in R_grid), "all layer radii must be positive")
    layers = []
    for R in R_grid:
        pf = planar_flow(t, R, config)
        try:
            xp = xpoint_from_flow(pf)
        except DegenerateXPoint as e:
            logger.warning(f"Layer R={R}: {e}")
            layers.append(StructureLayer(R=float(R), node=pf.node, xpoint=None, xpoint_lab=None,
                                         error=str(e)))
            continue
        layers.append(StructureLayer(R=float(R), node=pf.node, xpoint=xp,
                                     xpoint_lab=xpoint_lab_position(pf, xp)))
    logger.debug(f"Foliation at t={t}: {len(layers)} layers")
    return NodalXStructure(t=float(t), layers=tuple(layers))


def distance_to_structure(x: Sequence[float], t: float, R_grid: Sequence[float],
                          config: OscillatorConfig = DEFAULT_CONFIG) -> float:
    """Minimum distance from x to the X-points of all layers in R_grid."""
    x = np.asarray(x, dtype=float)
    xline = foliation(t, R_grid, config).xline
    if xline.size == 0:
        return math.inf
    return float(np.min(np.linalg.norm(xline - x, axis=1)))


def distance_to_layer(x: Sequence[float], t: float,
                      config: OscillatorConfig = DEFAULT_CONFIG) -> float:
    """Distance from x to the X-point of the layer through x (R = |x|)."""
    x = np.asarray(x, dtype=float)
    pf = planar_flow(t, float(np.linalg.norm(x)), config)
    return float(np.linalg.norm(xpoint_lab_position(pf, xpoint_from_flow(pf)) - x))


def distance_to_node(x: Sequence[float], t: float,
                     config: OscillatorConfig = DEFAULT_CONFIG) -> float:
    """Distance from x to the nearer nodal point on its own sphere."""
    x = np.asarray(x, dtype=float)
    R = float(np.linalg.norm(x))
    node = nodal_point(t, R, config).position
    return float(min(np.linalg.norm(x - node), np.linalg.norm(x + node)))


def structure_to_json(structure: NodalXStructure) -> Dict[str, Any]:
    """Per-layer records for the structure export."""
    layers = []
    for layer in structure.layers:
        record: Dict[str, Any] = {
            "R": layer.R,
            "node_xyz": layer.node.position.tolist(),
            "node_velocity": layer.node.velocity.tolist(),
        }
        if layer.xpoint is not None:
            record.update({
                "xpoint_uv": [layer.xpoint.u, layer.xpoint.v],
                "xpoint_xyz": layer.xpoint_lab.tolist(),
                "eigenvalues": list(layer.xpoint.eigenvalues),
                "slopes": list(layer.xpoint.slopes),
            })
        else:
            record["error"] = layer.error
        layers.append(record)
    return {"t": structure.t, "layers": layers}
