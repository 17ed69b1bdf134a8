"""
Trajectory Experiments - base-state Bohmian trajectories near moving nodal lines
Trajectories started next to the nodal point, families of such starts,
an ordered control far from the nodal lines, and the stretching-number
record of a trajectory scattered by a nodal point / X-point complex.
"""

from functools import partial
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from loguru import logger

from bohmflow.core.chaos import (
    detect_scattering, events_to_json, finite_time_lcn, lcn_decay_slope, metrics_table,
    stretching_from_deviation,
)
from bohmflow.core.errors import BohmflowError, DegenerateFit
from bohmflow.core.guidance import IntegratorSettings, Trajectory, integrate, integrate_with_deviation
from bohmflow.core.nodal import comoving_frame, distance_to_layer, distance_to_node, nodal_point
from bohmflow.core.wavefunction import OscillatorConfig, Superposition
from bohmflow.experiments.analysis import first_crossing
from bohmflow.experiments.base_experiment import BaseExperiment
from bohmflow.utils.svg_helper import SvgPlot, decimate


def offset_start(t0: float, R: float, offset: float, direction: str,
                 config: OscillatorConfig) -> np.ndarray:
    """
    Point on the sphere of radius R about `offset` away from the nodal point at t0.

    "perpendicular" moves across the node's velocity inside the tangent
    plane, "along" moves with it; either sign is chosen toward +u'.
    """
    node = nodal_point(t0, R, config)
    frame = comoving_frame(t0, R, config, reference=node.direction)
    heading = node.velocity / np.linalg.norm(node.velocity)
    if direction == "perpendicular":
        step = np.cross(node.direction, heading)
    elif direction == "along":
        step = heading
    else:
        raise ValueError(f"unknown offset direction {direction!r}")
    if float(step @ frame.S[0]) < 0.0:
        step = -step
    point = node.position + offset * step
    return R * point / np.linalg.norm(point)


def ordered_start(t0: float, R: float, config: OscillatorConfig) -> np.ndarray:
    """Point on the sphere of radius R a quarter turn from the nodal line, along +u'."""
    node = nodal_point(t0, R, config)
    return R * comoving_frame(t0, R, config, reference=node.direction).S[0]


def node_track(times: Sequence[float], R: float, config: OscillatorConfig,
               start: np.ndarray) -> np.ndarray:
    """Nodal point on the sphere R along `times`, starting on the branch nearest `start`."""
    reference, positions = np.asarray(start, dtype=float), []
    for t in times:
        point = nodal_point(t, R, config, reference)
        reference = point.direction
        positions.append(point.position)
    return np.array(positions).reshape(-1, 3)


def node_distances(trajectory: Trajectory, config: OscillatorConfig) -> np.ndarray:
    return np.array([distance_to_node(x, t, config)
                     for t, x in zip(trajectory.times, trajectory.positions)])


def xpoint_distances(trajectory: Trajectory, config: OscillatorConfig) -> np.ndarray:
    """Distance to the X-point of the layer through each sample; NaN where it is undefined."""
    distances = np.full(len(trajectory), np.nan)
    for k, (t, x) in enumerate(zip(trajectory.times, trajectory.positions)):
        try:
            distances[k] = distance_to_layer(x, t, config)
        except BohmflowError as e:
            logger.debug(f"No X-point distance at t={t:.6g}: {e}")
    return distances


def _family_member(state: Superposition, settings: IntegratorSettings, t_span: Sequence[float],
                   direction: str, task: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    R, offset = task
    x0 = offset_start(t_span[0], R, offset, direction, state.config)
    trajectory = integrate(state, x0, t_span[0], t_span[1], settings)
    _, table = trajectory.as_table()
    return x0, np.column_stack([table, node_distances(trajectory, state.config)])


class TrajectoryVsNodeExperiment(BaseExperiment):
    name = "trajectory-vs-node"
    plot = "trajectory started next to the nodal point against the node path, plus an ordered control"
    description = "Distance to the nodal point over time, departure times and the ordered contrast"

    def _ordered(self, state: Superposition, settings: IntegratorSettings, t0: float) -> Dict[str, Any]:
        R = float(self.param("R"))
        x0 = self._ordered_x0(state, t0, R)
        trajectory, deviation = integrate_with_deviation(
            state, x0, self.vector("dx0"), t0, float(self.param("ordered_t_end")), float(self.param("tau")),
            settings)
        series = stretching_from_deviation(deviation)
        lcn = finite_time_lcn(series)
        scattering = self.scattering_settings
        events = detect_scattering(series, None, scattering.background_window, scattering.jump_factor)
        try:
            slope = lcn_decay_slope(lcn, *self.param("fit_window"))
        except DegenerateFit as e:
            logger.warning(f"Ordered trajectory: {e}")
            slope = None

        self.writer.write_csv("ordered_trajectory.csv", *trajectory.as_table())
        self.writer.write_csv("ordered_metrics.csv", *metrics_table(series))
        keep = decimate(len(lcn.times))
        self.preview("ordered_chi.svg", SvgPlot("ordered trajectory: chi(t)", log_x=True, log_y=True)
                     .line(lcn.times[keep], np.abs(lcn.chi[keep])))
        return {"x0": x0, "chi_slope": slope, "final_chi": float(lcn.chi[-1]), "events": len(events)}

    def _ordered_x0(self, state: Superposition, t0: float, R: float) -> np.ndarray:
        if self.param("ordered_x0") is not None:
            return self.vector("ordered_x0")
        return ordered_start(t0, R, state.config)

    def execute(self) -> Dict[str, Any]:
        state = self.load_state()
        settings = self.integrator_settings
        R = float(self.param("R"))
        t0, t1 = (float(t) for t in self.param("t_span"))
        direction = self.param("offset_direction")
        x0 = offset_start(t0, R, float(self.param("offset")), direction, state.config)

        trajectory = integrate(state, x0, t0, t1, settings)
        distance = node_distances(trajectory, state.config)
        _, table = trajectory.as_table()
        self.writer.write_csv("trajectory.csv", "t,x1,x2,x3,R,node_distance",
                              np.column_stack([table, distance]))
        node = node_track(trajectory.times, R, state.config, x0)
        self.writer.write_csv("node_path.csv", "t,x1,x2,x3", np.column_stack([trajectory.times, node]))

        near, far = self.param("departure")
        summary = {
            "x0": x0,
            "offset": float(self.param("offset")),
            "offset_direction": direction,
            "t_departure": first_crossing(trajectory.times, distance, near),
            "t_far": first_crossing(trajectory.times, distance, far),
            "max_distance": float(distance.max()),
            "ordered": self._ordered(state, settings, t0),
        }
        self.writer.write_json("summary.json", summary)

        keep = decimate(len(trajectory))
        self.preview("distance.svg", SvgPlot("distance to the nodal point")
                     .line(trajectory.times[keep], distance[keep]))
        return summary


class TrajectoryFamiliesExperiment(BaseExperiment):
    name = "trajectory-families"
    plot = "families of trajectories started near the nodal point at several radii and distances"
    description = "Fixed offset over a set of radii, and several offsets on one sphere"

    def execute(self) -> Dict[str, Any]:
        state = self.load_state()
        t_span = [float(t) for t in self.param("t_span")]
        tasks = [("radius", float(R), float(self.param("offset"))) for R in self.param("radii")]
        tasks += [("offset", float(self.param("R")), float(d)) for d in self.param("offsets")]
        member = partial(_family_member, state, self.integrator_settings, t_span,
                         self.param("offset_direction"))
        results = self.map(member, [(R, offset) for _, R, offset in tasks])

        members = []
        plot = SvgPlot("distance to the nodal point", log_y=True)
        counters = {"radius": 0, "offset": 0}
        for (family, R, offset), (x0, rows) in zip(tasks, results):
            name = f"{family}_{counters[family]}.csv"
            counters[family] += 1
            self.writer.write_csv(name, "t,x1,x2,x3,R,node_distance", rows)
            keep = decimate(rows.shape[0], 2000)
            plot.line(rows[keep, 0], rows[keep, 5])
            members.append({"file": name, "family": family, "R": R, "offset": offset, "x0": x0,
                            "max_distance": float(rows[:, 5].max()),
                            "final_distance": float(rows[-1, 5])})
        self.writer.write_json("families.json", {"offset_direction": self.param("offset_direction"),
                                                 "members": members})
        self.preview("families.svg", plot)
        return {"members": len(members)}


class ScatteringExperiment(BaseExperiment):
    name = "scattering"
    plot = "stretching numbers, cumulative stretching and finite-time LCN with the scattering event"
    description = "Deviation-vector run with scattering events matched to X-point approaches"

    def execute(self) -> Dict[str, Any]:
        state = self.load_state()
        t0, t1 = (float(t) for t in self.param("t_span"))
        trajectory, deviation = integrate_with_deviation(
            state, self.vector("x0"), self.vector("dx0"), t0, t1, float(self.param("tau")),
            self.integrator_settings)
        series = stretching_from_deviation(deviation)
        lcn = finite_time_lcn(series)
        xdist = xpoint_distances(trajectory, state.config)
        ndist = node_distances(trajectory, state.config)

        scattering = self.scattering_settings
        events = detect_scattering(series, xdist, scattering.background_window, scattering.jump_factor)

        _, table = trajectory.as_table()
        self.writer.write_csv("trajectory.csv", "t,x1,x2,x3,R,xpoint_distance,node_distance",
                              np.column_stack([table, xdist, ndist]))
        self.writer.write_csv("deviation.csv", *deviation.as_table())
        self.writer.write_csv("metrics.csv", *metrics_table(series, xdist))
        self.writer.write_json("events.json", events_to_json(events))

        keep = decimate(len(series))
        self.preview("stretching.svg", SvgPlot("stretching numbers a(t)")
                     .line(series.times[keep], series.values[keep]))
        self.preview("lcn.svg", SvgPlot("finite-time LCN chi(t)", log_x=True)
                     .line(lcn.times[keep], lcn.chi[keep]))

        summary = {
            "events": len(events),
            "final_chi": float(lcn.chi[-1]),
            "renormalizations": len(deviation.renorm_events),
            "min_xpoint_distance": None if np.all(np.isnan(xdist)) else float(np.nanmin(xdist)),
        }
        self.writer.write_json("summary.json", summary)
        return summary

