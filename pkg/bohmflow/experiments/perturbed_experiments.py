"""
Perturbed Experiments - radial diffusion once a Psi_002 admixture breaks the sphere invariant
"""

from functools import partial
from typing import Any, Dict, List, Sequence

import numpy as np
from loguru import logger

from bohmflow.core.chaos import finite_time_lcn, metrics_table, stretching_from_deviation
from bohmflow.core.errors import NoConvergence
from bohmflow.core.guidance import IntegratorSettings, integrate, integrate_with_deviation
from bohmflow.core.integrator import sample_grid
from bohmflow.core.nodal import nodal_point, nodal_point_numeric
from bohmflow.core.wavefunction import Superposition, base_state, perturbed_state
from bohmflow.experiments.analysis import delta_r_max, fit_power_law
from bohmflow.experiments.base_experiment import BaseExperiment
from bohmflow.utils.svg_helper import SvgPlot, decimate


def perturbed_node_path(state: Superposition, times: Sequence[float], x0: np.ndarray) -> np.ndarray:
    """
    Numeric nodal point on the sphere |x0| followed by continuation from the
    base-state node nearest x0. Rows (t, x1, x2, x3); the path ends at the
    first time Newton fails.
    """
    R = float(np.linalg.norm(x0))
    guess = nodal_point(times[0], R, state.config, reference=x0).position
    rows: List[np.ndarray] = []
    for t in times:
        try:
            guess = nodal_point_numeric(state, t, guess)
        except NoConvergence as e:
            logger.warning(f"Perturbed node lost: {e}")
            break
        rows.append(np.concatenate([[t], guess]))
    return np.array(rows).reshape(-1, 4)


def _sweep_member(settings: IntegratorSettings, x0: Sequence[float], t_span: Sequence[float],
                  a4: float) -> np.ndarray:
    """(t, R) samples of the trajectory from x0 under the state with this a4; a4 = 0 is the base state."""
    state = base_state() if a4 == 0 else perturbed_state(a4)
    trajectory = integrate(state, x0, t_span[0], t_span[1], settings)
    return np.column_stack([trajectory.times, trajectory.radius])


class PerturbedDiffusionExperiment(BaseExperiment):
    name = "perturbed-diffusion"
    plot = "perturbed trajectory with its varying radius, stretching numbers and the perturbed node"
    description = "One trajectory of the a4-perturbed state with R(t) and its stretching record"

    def execute(self) -> Dict[str, Any]:
        a4 = float(self.param("a4"))
        state = self.load_state() if self.config.state else perturbed_state(a4)
        t0, t1 = (float(t) for t in self.param("t_span"))
        x0 = self.vector("x0")
        trajectory, deviation = integrate_with_deviation(
            state, x0, self.vector("dx0"), t0, t1, float(self.param("tau")), self.integrator_settings)
        series = stretching_from_deviation(deviation)
        lcn = finite_time_lcn(series)

        self.writer.write_csv("trajectory.csv", *trajectory.as_table())
        self.writer.write_csv("deviation.csv", *deviation.as_table())
        self.writer.write_csv("metrics.csv", *metrics_table(series))

        node = perturbed_node_path(state, sample_grid(t0, t1, float(self.param("node_dt"))), x0)
        self.writer.write_csv("perturbed_node.csv", "t,x1,x2,x3", node)

        summary = {
            "a4": a4,
            "delta_r_max": delta_r_max(trajectory),
            "R_min": float(trajectory.radius.min()),
            "R_max": float(trajectory.radius.max()),
            "final_chi": float(lcn.chi[-1]),
            "node_samples": int(node.shape[0]),
        }
        self.writer.write_json("summary.json", summary)

        keep = decimate(len(trajectory))
        self.preview("radius.svg", SvgPlot(f"R(t), a4={a4}")
                     .line(trajectory.times[keep], trajectory.radius[keep]))
        keep = decimate(len(series))
        self.preview("stretching.svg", SvgPlot(f"stretching numbers, a4={a4}")
                     .line(series.times[keep], series.values[keep]))
        return summary


class PowerLawExperiment(BaseExperiment):
    name = "power-law"
    plot = "maximum radial jump against a4 with its log-log power-law fit"
    description = "Delta R_max over an a4 sweep, a base-state control and the fitted exponent"

    def execute(self) -> Dict[str, Any]:
        grid = [float(a4) for a4 in self.param("a4_grid")]
        t_span = [float(t) for t in self.param("t_span")]
        member = partial(_sweep_member, self.integrator_settings, self.param("x0"), t_span)
        radii = self.map(member, [0.0] + grid)

        control = float(radii[0][:, 1].max() - radii[0][:, 1].min())
        jumps = [float(rows[:, 1].max() - rows[:, 1].min()) for rows in radii[1:]]
        for k, rows in enumerate(radii[1:]):
            self.writer.write_csv(f"radius_{k}.csv", "t,R", rows)
        self.writer.write_csv("sweep.csv", "a4,delta_r_max", np.column_stack([grid, jumps]))

        fit = fit_power_law(list(zip(grid, jumps)))
        document = {
            "fit": fit.to_dict(),
            "control_delta_r_max": control,
            "increasing": bool(np.all(np.diff(jumps) > 0)),
            "a4_grid": grid,
        }
        self.writer.write_json("fit.json", document)
        logger.info(f"Power law: p={fit.exponent:.4f}, c={fit.prefactor:.4g}")

        self.preview("power_law.svg", SvgPlot("Delta R_max against a4", log_x=True, log_y=True)
                     .line(grid, fit.predict(np.asarray(grid)), "#999999")
                     .line(grid, jumps))
        return document
