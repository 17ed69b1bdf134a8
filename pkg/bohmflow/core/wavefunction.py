"""
Oscillator Wavefunction - analytic eigenstates of the 3-d anisotropic oscillator
Evaluates Hermite-Gaussian eigenstates, their energies and finite superpositions
Psi(x, t) = sum_i a_i exp(-i E_i t / hbar) Psi_i(x) together with the analytic
gradient and Hessian.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Tuple, Union

import jsonschema
import numpy as np
import yaml
from loguru import logger

from bohmflow.core.errors import CapacityError, ConfigError, NormalizationError

# 2^n n! stays far from overflow and the upward recurrence stays accurate
# on |xi| <~ 10 up to this order.
MAX_QUANTUM_NUMBER = 30
NORMALIZATION_TOLERANCE = 1e-12

Vector = Union[Sequence[float], np.ndarray]


# ============= Domain Types =============

@dataclass(frozen=True)
class OscillatorConfig:
    """Masses, frequencies and hbar of the three oscillators."""

    masses: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    frequencies: Tuple[float, float, float] = (1.0, math.sqrt(2.0), math.sqrt(3.0))
    hbar: float = 1.0

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        frequencies = tuple(float(w) for w in self.frequencies)
        if len(masses) != 3 or len(frequencies) != 3:
            raise ConfigError("masses and frequencies need exactly three entries")
        values = masses + frequencies + (float(self.hbar),)
        if not all(np.isfinite(v) and v > 0 for v in values):
            raise ConfigError("masses, frequencies and hbar must be finite and positive",
                              masses=masses, frequencies=frequencies, hbar=self.hbar)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "frequencies", frequencies)
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def omegas(self) -> np.ndarray:
        return np.array(self.frequencies)

    @property
    def alphas(self) -> np.ndarray:
        """m_k w_k / hbar, the inverse squared length of each oscillator."""
        return np.array(self.masses) * np.array(self.frequencies) / self.hbar

    @property
    def velocity_scale(self) -> np.ndarray:
        """hbar / m_k, the prefactor of the guidance equation per axis."""
        return self.hbar / np.array(self.masses)

    @property
    def equal_masses(self) -> bool:
        return self.masses[0] == self.masses[1] == self.masses[2]


DEFAULT_CONFIG = OscillatorConfig()


@dataclass(frozen=True, order=True)
class Mode:
    """Quantum numbers (n1, n2, n3)."""

    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        for n in (self.n1, self.n2, self.n3):
            if int(n) != n or n < 0:
                raise ConfigError(f"quantum numbers must be non-negative integers, got {self.as_tuple()}")
            if n > MAX_QUANTUM_NUMBER:
                raise CapacityError(
                    f"quantum number {n} exceeds supported maximum {MAX_QUANTUM_NUMBER}")
        object.__setattr__(self, "n1", int(self.n1))
        object.__setattr__(self, "n2", int(self.n2))
        object.__setattr__(self, "n3", int(self.n3))

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)

    def __iter__(self):
        return iter(self.as_tuple())


@dataclass(frozen=True)
class SuperpositionTerm:
    coefficient: complex
    mode: Mode
    energy: float


@dataclass(frozen=True)
class ComplexAmplitude:
    """Psi and its gradient at one point."""

    value: complex
    gradient: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class _Tables:
    quanta: np.ndarray          # (terms, 3) int
    coefficients: np.ndarray    # (terms,) complex
    energies: np.ndarray        # (terms,) float
    norms: Tuple[np.ndarray, np.ndarray, np.ndarray]  # per axis, indexed by n
    n_max: Tuple[int, int, int]


@dataclass(frozen=True)
class Superposition:
    """
    Weighted eigenmodes with cached energies; the single source of truth for Psi.

    Construct with `Superposition.from_coefficients` so energies are filled in.
    """

    terms: Tuple[SuperpositionTerm, ...]
    config: OscillatorConfig = DEFAULT_CONFIG

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise NormalizationError("a superposition needs at least one term")
        object.__setattr__(self, "terms", terms)

        modes = [term.mode for term in terms]
        if len(set(modes)) != len(modes):
            raise NormalizationError("modes of a superposition must be pairwise distinct",
                                     modes=[m.as_tuple() for m in modes])

        norm = sum(abs(term.coefficient) ** 2 for term in terms)
        if abs(norm - 1.0) > NORMALIZATION_TOLERANCE:
            raise NormalizationError("sum of |a_i|^2 must equal 1", norm=norm)

        for term in terms:
            expected = mode_energy(self.config, term.mode)
            if term.energy != expected:
                raise NormalizationError("cached energy does not match the mode",
                                         mode=term.mode.as_tuple(), energy=term.energy)

    @classmethod
    def from_coefficients(cls, pairs: Iterable[Tuple[complex, Union[Mode, Sequence[int]]]],
                          config: OscillatorConfig = DEFAULT_CONFIG) -> "Superposition":
        """Build from (coefficient, mode) pairs, computing each energy."""
        terms = []
        for coefficient, mode in pairs:
            mode = mode if isinstance(mode, Mode) else Mode(*mode)
            terms.append(SuperpositionTerm(complex(coefficient), mode, mode_energy(config, mode)))
        return cls(tuple(terms), config)

    @property
    def modes(self) -> Tuple[Mode, ...]:
        return tuple(term.mode for term in self.terms)

    @property
    def is_base_state(self) -> bool:
        """True for the equal-weight (1,0,0)+(0,1,0)+(0,0,1) superposition."""
        if sorted(self.modes) != [Mode(0, 0, 1), Mode(0, 1, 0), Mode(1, 0, 0)]:
            return False
        first = self.terms[0].coefficient
        return all(abs(term.coefficient - first) < 1e-15 for term in self.terms)

    @cached_property
    def _tables(self) -> _Tables:
        quanta = np.array([term.mode.as_tuple() for term in self.terms], dtype=int)
        n_max = tuple(int(quanta[:, k].max()) for k in range(3))
        alphas = self.config.alphas
        norms = tuple(
            np.array([(alphas[k] / math.pi) ** 0.25 / math.sqrt(2.0 ** n * math.factorial(n))
                      for n in range(n_max[k] + 1)])
            for k in range(3)
        )
        return _Tables(
            quanta=quanta,
            coefficients=np.array([term.coefficient for term in self.terms], dtype=complex),
            energies=np.array([term.energy for term in self.terms]),
            norms=norms,
            n_max=n_max,
        )


# ============= Operations =============

def hermite_table(n_max: int, x) -> np.ndarray:
    """Physicists' Hermite polynomials H_0..H_{n_max} at x by upward recurrence."""
    x = np.asarray(x, dtype=float)
    table = np.empty((n_max + 1,) + x.shape)
    table[0] = 1.0
    if n_max >= 1:
        table[1] = 2.0 * x
    for n in range(1, n_max):
        table[n + 1] = 2.0 * x * table[n] - 2.0 * n * table[n - 1]
    return table


def hermite_eval(n: int, x):
    """H_n(x) via H_{n+1} = 2x H_n - 2n H_{n-1}."""
    if n < 0:
        raise ValueError(f"Hermite order must be non-negative, got {n}")
    value = hermite_table(n, x)[n]
    return float(value) if np.ndim(value) == 0 else value


def mode_energy(config: OscillatorConfig, mode: Mode) -> float:
    """E = sum_k (n_k + 1/2) hbar w_k."""
    return float(sum((n + 0.5) * config.hbar * w for n, w in zip(mode, config.frequencies)))


def _axis_jet(alpha: float, norms: np.ndarray, n_max: int, x: float, order: int):
    """Values and derivatives of the 1-d eigenfunctions 0..n_max at x."""
    root = math.sqrt(alpha)
    h = hermite_table(n_max, root * x)
    gauss = math.exp(-0.5 * alpha * x * x)
    scale = norms * gauss
    f0 = scale * h
    if order == 0:
        return f0, None, None

    n = np.arange(n_max + 1)
    dh = np.zeros_like(h)
    dh[1:] = 2.0 * n[1:] * h[:-1]
    f1 = scale * (root * dh - alpha * x * h)
    if order == 1:
        return f0, f1, None

    d2h = np.zeros_like(h)
    d2h[2:] = 4.0 * n[2:] * (n[2:] - 1) * h[:-2]
    f2 = scale * (alpha * d2h - 2.0 * alpha * root * x * dh + (alpha * alpha * x * x - alpha) * h)
    return f0, f1, f2


def eigenstate_amplitude(config: OscillatorConfig, mode: Mode, x: Vector) -> float:
    """Real product eigenfunction Psi_{n1 n2 n3}(x), Gaussian and normalization included."""
    if not isinstance(mode, Mode):
        mode = Mode(*mode)
    x = np.asarray(x, dtype=float)
    alphas = config.alphas
    value = 1.0
    for k, n in enumerate(mode):
        norm = (alphas[k] / math.pi) ** 0.25 / math.sqrt(2.0 ** n * math.factorial(n))
        value *= norm * math.exp(-0.5 * alphas[k] * x[k] ** 2) * hermite_eval(n, math.sqrt(alphas[k]) * x[k])
    return float(value)


def psi_jet(state: Superposition, x: Vector, t: float, order: int = 2):
    """
    Psi, grad Psi and the Hessian of Psi at (x, t).

    Args:
        state: Superposition to evaluate
        x: Position (3-vector)
        t: Time
        order: 0 (value), 1 (+gradient) or 2 (+Hessian)

    Returns:
        Tuple (value, gradient, hessian); entries beyond `order` are None
    """
    tables = state._tables
    x = np.asarray(x, dtype=float)
    alphas = state.config.alphas
    q = tables.quanta

    jets = [_axis_jet(alphas[k], tables.norms[k], tables.n_max[k], x[k], order) for k in range(3)]
    f = [jets[k][0][q[:, k]] for k in range(3)]

    phase = tables.coefficients * np.exp(-1j * tables.energies * t / state.config.hbar)
    value = complex(np.sum(phase * f[0] * f[1] * f[2]))
    if order == 0:
        return value, None, None

    d = [jets[k][1][q[:, k]] for k in range(3)]
    gradient = np.array([
        np.sum(phase * d[0] * f[1] * f[2]),
        np.sum(phase * f[0] * d[1] * f[2]),
        np.sum(phase * f[0] * f[1] * d[2]),
    ])
    if order == 1:
        return value, gradient, None

    dd = [jets[k][2][q[:, k]] for k in range(3)]
    h01 = np.sum(phase * d[0] * d[1] * f[2])
    h02 = np.sum(phase * d[0] * f[1] * d[2])
    h12 = np.sum(phase * f[0] * d[1] * d[2])
    hessian = np.array([
        [np.sum(phase * dd[0] * f[1] * f[2]), h01, h02],
        [h01, np.sum(phase * f[0] * dd[1] * f[2]), h12],
        [h02, h12, np.sum(phase * f[0] * f[1] * dd[2])],
    ])
    return value, gradient, hessian


def psi(state: Superposition, x: Vector, t: float) -> ComplexAmplitude:
    """Value and analytic gradient of the superposition at (x, t)."""
    value, gradient, _ = psi_jet(state, x, t, order=1)
    return ComplexAmplitude(value=value, gradient=gradient)


def probability_density(state: Superposition, x: Vector, t: float) -> float:
    value, _, _ = psi_jet(state, x, t, order=0)
    return abs(value) ** 2


# ============= State Factories =============

def base_state(config: OscillatorConfig = DEFAULT_CONFIG) -> Superposition:
    """(Psi_100 + Psi_010 + Psi_001) / sqrt(3)."""
    a = 1.0 / math.sqrt(3.0)
    return Superposition.from_coefficients(
        [(a, Mode(1, 0, 0)), (a, Mode(0, 1, 0)), (a, Mode(0, 0, 1))], config)


def perturbed_state(a4: complex, config: OscillatorConfig = DEFAULT_CONFIG) -> Superposition:
    """
    a1 Psi_100 + a2 Psi_010 + a3 Psi_001 + a4 Psi_002 with a1 = a2 = 1/sqrt(3)
    and a3 = sqrt(1 - |a1|^2 - |a2|^2 - |a4|^2).

    Raises:
        NormalizationError: If |a4| is too large for a real a3
    """
    a = 1.0 / math.sqrt(3.0)
    remainder = 1.0 - 2.0 * a * a - abs(a4) ** 2
    if remainder < 0.0:
        raise NormalizationError("a4 too large: 1 - |a1|^2 - |a2|^2 - |a4|^2 < 0", a4=a4)
    a3 = math.sqrt(remainder)
    if a4 == 0:
        return Superposition.from_coefficients(
            [(a, Mode(1, 0, 0)), (a, Mode(0, 1, 0)), (a3, Mode(0, 0, 1))], config)
    return Superposition.from_coefficients(
        [(a, Mode(1, 0, 0)), (a, Mode(0, 1, 0)), (a3, Mode(0, 0, 1)), (a4, Mode(0, 0, 2))], config)


# ============= State Files =============

STATE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["terms"],
    "properties": {
        "masses": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "frequencies": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "hbar": {"type": "number"},
        "terms": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "minItems": 5,
                "maxItems": 5,
                "prefixItems": [
                    {"type": "integer", "minimum": 0},
                    {"type": "integer", "minimum": 0},
                    {"type": "integer", "minimum": 0},
                    {"type": "number"},
                    {"type": "number"},
                ],
            },
        },
    },
}


def parse_state_spec(text: str) -> Superposition:
    """
    Parse a YAML state file.

    Example:
        masses: [1.0, 1.0, 1.0]
        frequencies: [1.0, 1.4142135623730951, 1.7320508075688772]
        hbar: 1.0
        terms:
          - [1, 0, 0, 0.5773502691896258, 0.0]

    Raises:
        ConfigError: On malformed documents or unknown keys
    """
    try:
        document = yaml.safe_load(text)
        jsonschema.validate(document, STATE_SCHEMA)
    except (yaml.YAMLError, jsonschema.ValidationError) as e:
        raise ConfigError(f"invalid state file: {getattr(e, 'message', e)}") from e

    defaults = DEFAULT_CONFIG
    config = OscillatorConfig(
        masses=tuple(document.get("masses", defaults.masses)),
        frequencies=tuple(document.get("frequencies", defaults.frequencies)),
        hbar=document.get("hbar", defaults.hbar),
    )
    pairs = [(complex(re, im), Mode(n1, n2, n3)) for n1, n2, n3, re, im in document["terms"]]
    return Superposition.from_coefficients(pairs, config)


def serialize_state_spec(state: Superposition) -> str:
    """Inverse of parse_state_spec; floats use their shortest round-trip repr."""
    document = {
        "masses": [float(m) for m in state.config.masses],
        "frequencies": [float(w) for w in state.config.frequencies],
        "hbar": float(state.config.hbar),
        "terms": [
            [*term.mode.as_tuple(), float(term.coefficient.real), float(term.coefficient.imag)]
            for term in state.terms
        ],
    }
    return yaml.safe_dump(document, default_flow_style=None, sort_keys=False)


def load_state_spec(path: Union[str, Path]) -> Superposition:
    """Read a state file."""
    path = Path(path)
    logger.debug(f"Loading state file from {path}")
    return parse_state_spec(path.read_text())
