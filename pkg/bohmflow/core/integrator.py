"""
Adaptive Integrator - embedded Dormand-Prince 5(4) with PI step control
Adds two hooks the guidance flow needs on top of plain error control: a step
cap computed from the current state (node-distance guard) and an
admissibility test on every trial point (node rejection).
"""

from typing import Callable, List, Optional, Sequence

import numpy as np
from loguru import logger

from bohmflow.core.errors import NearNode, NodeCollision, StepUnderflow

Rhs = Callable[[float, np.ndarray], np.ndarray]
StepCap = Callable[[float, np.ndarray, np.ndarray], float]
Admissible = Callable[[float, np.ndarray], bool]
ErrorScale = Callable[[np.ndarray, np.ndarray], np.ndarray]
AfterStep = Callable[[float, np.ndarray], Optional[np.ndarray]]
OnSample = Callable[[float, np.ndarray], None]


class DormandPrince54:
    """
    Dormand-Prince 5(4) pair (DOPRI5), seven stages with FSAL, 5th order
    propagation, 4th order embedded error estimate and 4th order dense output.

    Step size follows a PI controller on the scaled RMS error. Stage
    evaluations that raise NearNode, and trial points rejected by
    `admissible`, count as rejected steps and shrink the step by four.
    """

    C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
    A = [
        np.array([]),
        np.array([1 / 5]),
        np.array([3 / 40, 9 / 40]),
        np.array([44 / 45, -56 / 15, 32 / 9]),
        np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
        np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
        np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
    ]
    B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
    # b - b_hat
    E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
    # Dense output: y(t + theta h) = y + h K^T P [theta, theta^2, theta^3, theta^4]
    P = np.array([
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ])

    SAFETY = 0.9
    MIN_FACTOR = 0.2
    MAX_FACTOR = 5.0
    # PI controller exponents for a 4th order error estimate
    BETA1 = 0.7 / 5
    BETA2 = 0.4 / 5

    def __init__(self, rhs: Rhs, *, max_step: float, min_step: float, max_steps: int,
                 error_scale: ErrorScale, step_cap: Optional[StepCap] = None,
                 admissible: Optional[Admissible] = None, after_step: Optional[AfterStep] = None):
        """
        Initialize the stepper.

        Args:
            rhs: Right-hand side f(t, y)
            max_step: Largest allowed step
            min_step: Steps below this raise StepUnderflow / NodeCollision
            max_steps: Hard cap on accepted + rejected steps
            error_scale: (y_old, y_new) -> per-component error scale
            step_cap: (t, y, f) -> largest step allowed from this state
            admissible: (t, y) -> False rejects a trial point as too close to a node
            after_step: (t, y) -> replacement y between steps, or None
        """
        self.rhs = rhs
        self.max_step = max_step
        self.min_step = min_step
        self.max_steps = max_steps
        self.error_scale = error_scale
        self.step_cap = step_cap
        self.admissible = admissible
        self.after_step = after_step
        self.accepted = 0
        self.rejected = 0
        self.node_rejections = 0

    def _initial_step(self, t: float, y: np.ndarray, f: np.ndarray) -> float:
        scale = self.error_scale(y, y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((f / scale) ** 2))
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
        return min(h, self.max_step)

    def _stages(self, t: float, y: np.ndarray, f: np.ndarray, h: float):
        # Seventh stage is f(t + h, y_new), filled in by the caller (FSAL)
        K = np.zeros((7, y.size))
        K[0] = f
        for i in range(1, 6):
            K[i] = self.rhs(t + self.C[i] * h, y + h * (self.A[i] @ K[:i]))
        y_new = y + h * (self.B[:6] @ K[:6])
        return K, y_new

    def _dense(self, y: np.ndarray, K: np.ndarray, h: float, theta: float) -> np.ndarray:
        powers = np.array([theta, theta ** 2, theta ** 3, theta ** 4])
        return y + h * (K.T @ (self.P @ powers))

    def solve(self, t0: float, y0: np.ndarray, t1: float, sample_times: Sequence[float],
              on_sample: OnSample) -> None:
        """
        Integrate from t0 to t1, calling on_sample(t, y) at each sample time.

        Raises:
            NodeCollision: If node rejections drive the step below min_step
            StepUnderflow: If error control drives the step below min_step
        """
        t = float(t0)
        y = np.array(y0, dtype=float)
        samples = np.asarray(sample_times, dtype=float)
        index = 0

        try:
            f = self.rhs(t, y)
        except NearNode as e:
            raise NodeCollision("initial point inside the node guard", t=t, x=y[:3]) from e

        while index < samples.size and samples[index] <= t:
            on_sample(samples[index], y.copy())
            index += 1

        h = self._initial_step(t, y, f)
        err_prev = 1e-4
        last_rejected = False
        last_was_node = False

        while t < t1:
            if self.accepted + self.rejected >= self.max_steps:
                raise StepUnderflow("maximum number of steps exceeded", t=t, x=y[:3],
                                    step=self.accepted)

            h = min(h, self.max_step)
            capped = False
            if self.step_cap is not None:
                cap = self.step_cap(t, y, f)
                capped = cap < h
                h = min(h, cap)
            remaining = t1 - t
            final = h >= remaining
            if final:
                h = remaining
            elif h < self.min_step:
                error = NodeCollision if (last_was_node or capped) else StepUnderflow
                raise error("required step below min_step", t=t, x=y[:3], step=h)

            try:
                K, y_new = self._stages(t, y, f, h)
                t_new = t1 if final else t + h
                if self.admissible is not None and not self.admissible(t_new, y_new):
                    raise NearNode("trial point inside the node guard", t=t_new)
                f_new = self.rhs(t_new, y_new)
            except NearNode:
                self.rejected += 1
                self.node_rejections += 1
                last_rejected = True
                last_was_node = True
                h *= 0.25
                logger.debug(f"Node rejection at t={t:.10g}, shrinking step to {h:.3e}")
                continue
            K[6] = f_new

            scale = self.error_scale(y, y_new)
            err = float(np.sqrt(np.mean((h * (self.E @ K) / scale) ** 2)))

            if err > 1.0:
                self.rejected += 1
                last_rejected = True
                last_was_node = False
                h *= max(self.MIN_FACTOR, self.SAFETY * err ** -0.2)
                continue

            while index < samples.size and samples[index] <= t_new:
                theta = (samples[index] - t) / h
                y_sample = y_new.copy() if samples[index] == t_new else self._dense(y, K, h, theta)
                if self.admissible is not None and not self.admissible(samples[index], y_sample):
                    raise NodeCollision("dense sample inside the node guard",
                                        t=samples[index], x=y_sample[:3])
                on_sample(samples[index], y_sample)
                index += 1

            t, y, f = t_new, y_new, f_new
            self.accepted += 1

            if err == 0.0:
                factor = self.MAX_FACTOR
            else:
                factor = self.SAFETY * err ** -self.BETA1 * err_prev ** self.BETA2
                factor = min(self.MAX_FACTOR, max(self.MIN_FACTOR, factor))
            if last_rejected:
                factor = min(factor, 1.0)
            err_prev = max(err, 1e-4)
            last_rejected = False
            last_was_node = False
            h *= factor

            if self.after_step is not None:
                replaced = self.after_step(t, y)
                if replaced is not None:
                    y = replaced
                    f = self.rhs(t, y)

        logger.debug(f"Integration finished: {self.accepted} accepted, {self.rejected} rejected "
                     f"({self.node_rejections} near nodes)")


def sample_grid(t0: float, t1: float, interval: float, include_end: bool = True) -> np.ndarray:
    """Uniform times t0 + k*interval up to t1, optionally closing with t1."""
    if t1 <= t0:
        return np.array([float(t0)])
    count = int(np.floor((t1 - t0) / interval + 1e-9))
    times = t0 + interval * np.arange(count + 1)
    times[-1] = min(times[-1], t1)
    if include_end and t1 - times[-1] > 1e-9 * max(1.0, abs(t1)):
        times = np.append(times, t1)
    return times


def rms_scale(abs_tol: float, rel_tol: float) -> ErrorScale:
    """Standard mixed absolute/relative component scale."""
    def scale(y_old: np.ndarray, y_new: np.ndarray) -> np.ndarray:
        return abs_tol + rel_tol * np.maximum(np.abs(y_old), np.abs(y_new))
    return scale


def block_scale(blocks: List[ErrorScale], sizes: List[int]) -> ErrorScale:
    """Concatenate per-block error scales over a partitioned state."""
    bounds = np.cumsum([0] + list(sizes))

    def scale(y_old: np.ndarray, y_new: np.ndarray) -> np.ndarray:
        return np.concatenate([
            block(y_old[lo:hi], y_new[lo:hi]) for block, lo, hi in zip(blocks, bounds[:-1], bounds[1:])
        ])
    return scale
