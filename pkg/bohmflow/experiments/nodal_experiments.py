"""
Nodal Experiments - pipelines over the base-state nodal structure
Node paths and kinematics, the frozen-time nodal point / X-point complex,
its Hopf-type label changes and the 3-d foliation of X-points.
"""

import math
from functools import partial
from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger

from bohmflow.core.errors import ClassificationAmbiguous
from bohmflow.core.integrator import sample_grid
from bohmflow.core.manifolds import (
    BRANCHES, ManifoldCurve, ManifoldSettings, classify_curves, locate_transitions, node_focus_index,
    scan_labels, scan_times, trace_all, trace_streamline,
)
from bohmflow.core.nodal import (
    PlanarFlow, XPoint, foliation, nodal_path, planar_flow, structure_to_json,
    xpoint_from_flow, xpoint_lab_position,
)
from bohmflow.core.wavefunction import OscillatorConfig
from bohmflow.experiments.base_experiment import BaseExperiment
from bohmflow.utils.svg_helper import SvgPlot, decimate

LABEL_CODES = {"stable": 1, "unstable": -1, None: 0}


def branch_slug(branch: str) -> str:
    """File-name form of a branch name: unstable+ -> unstable_plus."""
    return branch.replace("+", "_plus").replace("-", "_minus")


def _focus_index(pf: PlanarFlow, xp: XPoint) -> Optional[float]:
    try:
        return node_focus_index(pf, xp)
    except ClassificationAmbiguous as e:
        logger.warning(f"No focus index at t={pf.t}, R={pf.R}: {e}")
        return None


def _classify(curves: List[ManifoldCurve], pf: PlanarFlow, min_turns: int) -> Dict[str, Any]:
    try:
        result = classify_curves(curves, pf.t, pf.R, min_turns)
    except ClassificationAmbiguous as e:
        logger.warning(f"Complex at t={pf.t}, R={pf.R} unlabelled: {e}")
        return {"label": None, "branch": None, "turns": None}
    return {"label": result.label, "branch": result.branch, "turns": result.turns}


def xpoint_record(pf: PlanarFlow, xp: XPoint) -> Dict[str, Any]:
    return {
        "t": pf.t,
        "R": pf.R,
        "node_xyz": pf.node.position,
        "node_velocity": pf.node.velocity,
        "frame": {"theta": pf.frame.theta, "phi": pf.frame.phi},
        "flow": {"B": pf.B, "phi1": pf.phi1, "phi2": pf.phi2, "phi3": pf.phi3,
                 "V_u": pf.V_u, "V_v": pf.V_v},
        "xpoint_uv": [xp.u, xp.v],
        "xpoint_xyz": xpoint_lab_position(pf, xp),
        "jacobian": xp.jacobian,
        "eigenvalues": list(xp.eigenvalues),
        "eigenvectors": xp.eigenvectors,
        "slopes": list(xp.slopes),
    }


class NodalTrajectoryExperiment(BaseExperiment):
    name = "nodal-trajectory"
    plot = "path of the nodal point on the sphere of radius R"
    description = "Nodal point R n(t) sampled every dt"

    def execute(self) -> Dict[str, Any]:
        config = self.load_state().config
        R = float(self.param("R"))
        t0, t1 = self.param("t_span")
        times = sample_grid(t0, t1, self.param("dt"))
        positions = np.array([point.position for point in nodal_path(times, R, config)])

        theta = np.arccos(np.clip(positions[:, 2] / R, -1.0, 1.0))
        phi = np.mod(np.arctan2(positions[:, 1], positions[:, 0]), 2.0 * math.pi)
        self.writer.write_csv("node_path.csv", "t,x1,x2,x3,theta,phi",
                              np.column_stack([times, positions, theta, phi]))

        keep = decimate(times.size)
        self.preview("node_path.svg", SvgPlot(f"nodal point on R={R} (x1, x2)")
                     .line(positions[keep, 0], positions[keep, 1]))
        return {"samples": int(times.size), "R": R}


class NodalKinematicsExperiment(BaseExperiment):
    name = "nodal-kinematics"
    plot = "speed and acceleration of the nodal point against t"
    description = "Analytic |dx_nod/dt| and |d2x_nod/dt2| with the spike near a convergence point"

    def execute(self) -> Dict[str, Any]:
        config = self.load_state().config
        R = float(self.param("R"))
        t0, t1 = self.param("t_span")
        times = sample_grid(t0, t1, self.param("dt"))
        path = nodal_path(times, R, config)
        positions = np.array([point.position for point in path])
        speed = np.array([point.speed for point in path])
        acceleration = np.array([float(np.linalg.norm(point.acceleration)) for point in path])
        self.writer.write_csv("kinematics.csv", "t,x1,x2,x3,speed,acceleration",
                              np.column_stack([times, positions, speed, acceleration]))

        lo, hi = self.param("spike_window")
        window = (times >= lo) & (times <= hi)
        summary: Dict[str, Any] = {"R": R, "spike_window": [lo, hi]}
        for label, values in (("speed", speed), ("acceleration", acceleration)):
            if not np.any(window):
                summary[label] = None
                continue
            peak = int(np.flatnonzero(window)[np.argmax(values[window])])
            median = float(np.median(values))
            summary[label] = {
                "peak": float(values[peak]),
                "t_peak": float(times[peak]),
                "median": median,
                "ratio": float(values[peak] / median) if median > 0 else None,
            }
        self.writer.write_json("summary.json", summary)

        keep = decimate(times.size)
        self.preview("kinematics.svg", SvgPlot(f"nodal speed / acceleration, R={R}", log_y=True)
                     .line(times[keep], speed[keep])
                     .line(times[keep], acceleration[keep]))
        return summary


class ComplexPortraitExperiment(BaseExperiment):
    name = "complex-portrait"
    plot = "frozen-time phase portrait of the nodal point / X-point complex"
    description = "X-point, its four asymptotic curves and streamlines of the planar flow"

    def streamline_seeds(self, xp: XPoint) -> np.ndarray:
        count = int(self.param("streamlines"))
        angles = 2.0 * math.pi * (np.arange(count) + 0.5) / max(count, 1)
        radius = xp.distance_to_node
        return radius * np.column_stack([np.cos(angles), np.sin(angles)])

    def execute(self) -> Dict[str, Any]:
        config = self.load_state().config
        settings = self.manifold_settings
        t, R = float(self.param("t")), float(self.param("R"))
        pf = planar_flow(t, R, config)
        xp = xpoint_from_flow(pf)
        curves = trace_all(pf, xp, settings)

        plot = SvgPlot(f"complex at t={t}, R={R} (u', v')")
        for curve in curves:
            self.writer.write_csv(f"manifold_{branch_slug(curve.branch)}.csv", *curve.as_table())
            keep = decimate(curve.points.shape[0])
            plot.line(curve.uv[keep, 0], curve.uv[keep, 1])

        rows = []
        for k, seed in enumerate(self.streamline_seeds(xp)):
            points = trace_streamline(pf, xp, seed, settings)
            rows.append(np.column_stack([np.full(points.shape[0], k), points]))
            keep = decimate(points.shape[0], 1000)
            plot.line(points[keep, 1], points[keep, 2], color="#bbbbbb")
        self.writer.write_csv("streamlines.csv", "id,s,u,v",
                              np.vstack(rows) if rows else np.empty((0, 4)))

        record = xpoint_record(pf, xp)
        record["classification"] = _classify(curves, pf, settings.min_turns)
        record["focus_index"] = _focus_index(pf, xp)
        record["terminations"] = {curve.branch: curve.termination for curve in curves}
        self.writer.write_json("xpoint.json", record)

        self.preview("portrait.svg", plot.marker(0.0, 0.0).marker(xp.u, xp.v, "#c0392b"))
        return {"classification": record["classification"], "focus_index": record["focus_index"]}


class HopfTransitionExperiment(BaseExperiment):
    name = "hopf-transition"
    plot = "complex before and after the stable/unstable label change"
    description = "Label scan over t with bisected transition times and probe portraits"

    def execute(self) -> Dict[str, Any]:
        config = self.load_state().config
        settings = self.manifold_settings
        R = float(self.param("R"))
        times = scan_times(tuple(self.param("t_span")), self.param("dt"))
        labels = scan_labels(R, times, settings, config)
        self.writer.write_csv("labels.csv", "t,label",
                              np.column_stack([times, [LABEL_CODES[label] for label in labels]]))
        transitions = locate_transitions(R, times, labels, settings, config)

        probes = []
        for k, t in enumerate(self.param("probe_times")):
            pf = planar_flow(float(t), R, config)
            xp = xpoint_from_flow(pf)
            curves = trace_all(pf, xp, settings)
            for curve in curves:
                self.writer.write_csv(f"probe_{k}_{branch_slug(curve.branch)}.csv", *curve.as_table())
            probes.append({"t": float(t), **_classify(curves, pf, settings.min_turns),
                           "focus_index": _focus_index(pf, xp)})

        document = {
            "R": R,
            "transitions": [
                {"t_star": tr.t_star, "before": tr.before, "after": tr.after, "bracket": list(tr.bracket),
                 "width": tr.width}
                for tr in transitions
            ],
            "probes": probes,
        }
        self.writer.write_json("hopf.json", document)
        self.preview("labels.svg", SvgPlot(f"complex label, R={R} (+1 stable, -1 unstable)")
                     .line(times, [LABEL_CODES[label] for label in labels]))
        return {"transitions": document["transitions"]}


def _layer_curves(t: float, settings: ManifoldSettings, config: OscillatorConfig,
                  R: float) -> List[np.ndarray]:
    """Asymptotic curves of one layer in lab coordinates, rows (s, x1, x2, x3)."""
    pf = planar_flow(t, R, config)
    xp = xpoint_from_flow(pf)
    curves = []
    for curve in trace_all(pf, xp, settings):
        lab = pf.node.position + curve.uv @ pf.frame.S[:2]
        curves.append(np.column_stack([curve.points[:, 0], lab]))
    return curves


class FoliationExperiment(BaseExperiment):
    name = "foliation"
    plot = "3-d nodal line, X-line and layer manifolds at one time"
    description = "Nodal point and X-point of every layer in R_grid"

    def execute(self) -> Dict[str, Any]:
        config = self.load_state().config
        t = float(self.param("t"))
        structure = foliation(t, self.param("R_grid"), config)
        self.writer.write_json("structure.json", structure_to_json(structure))

        radii = np.array([layer.R for layer in structure.layers])
        self.writer.write_csv("nodes.csv", "R,x1,x2,x3",
                              np.column_stack([radii, structure.node_positions]))
        with_x = [layer for layer in structure.layers if layer.xpoint_lab is not None]
        self.writer.write_csv("xline.csv", "R,x1,x2,x3",
                              np.array([[layer.R, *layer.xpoint_lab] for layer in with_x]).reshape(-1, 4))

        layers = [float(R) for R in self.param("manifold_layers")]
        per_layer = self.map(partial(_layer_curves, t, self.manifold_settings, config), layers)
        plot = SvgPlot(f"nodal line and X-line at t={t} (x1, x3)")
        for k, (R, curves) in enumerate(zip(layers, per_layer)):
            for branch, rows in zip(BRANCHES, curves):
                self.writer.write_csv(f"layer_{k}_{branch_slug(branch)}.csv", "s,x1,x2,x3", rows)
                keep = decimate(rows.shape[0], 1000)
                plot.line(rows[keep, 1], rows[keep, 3], color="#bbbbbb")

        plot.line(structure.node_positions[:, 0], structure.node_positions[:, 2], "#1f4e9c")
        xline = structure.xline
        if xline.size:
            plot.line(xline[:, 0], xline[:, 2], "#c0392b")
        self.preview("structure.svg", plot)
        return {
            "layers": len(structure.layers),
            "degenerate_layers": [layer.R for layer in structure.layers if layer.error],
        }
