"""
Nodal Structure Tests - nodal line, comoving frame, planar flow and X-points
"""

import allure
import numpy as np
import pytest
from loguru import logger

from bohmflow.core.errors import ConfigError, DegenerateTime, DegenerateXPoint, NearNode
from bohmflow.core.guidance import PhasePoint, base_flow_coefficients
from bohmflow.core.nodal import (
    comoving_frame, density_form, distance_to_node, distance_to_structure,
    foliation, frame_matrix, frame_velocity, nodal_direction, nodal_kinematics, nodal_path,
    nodal_point, nodal_point_numeric, planar_flow, planar_jacobian, planar_velocity, structure_to_json,
    xpoint, xpoint_lab_position,
)
from bohmflow.core.wavefunction import OscillatorConfig, psi


@allure.feature("Nodal Structure")
@allure.story("Nodal Line")
class TestNodalLine:

    @pytest.mark.smoke
    @allure.title("Psi vanishes on the nodal line")
    def test_psi_vanishes(self, base_state, rng):
        worst = 0.0
        for _ in range(100):
            t = rng.uniform(0.1, 100.0)
            R = rng.uniform(0.1, 5.0)
            worst = max(worst, abs(psi(base_state, nodal_point(t, R).position, t).value))
        logger.info(f"Largest |Psi| on the nodal line: {worst:.2e}")
        assert worst < 1e-10

    @allure.title("Nodal velocity is tangent to the sphere")
    def test_velocity_perpendicular(self, rng):
        for _ in range(50):
            point = nodal_point(rng.uniform(0.1, 50.0), rng.uniform(0.5, 5.0))
            assert abs(point.position @ point.velocity) < 1e-8 * max(1.0, point.speed * point.R)
            assert np.linalg.norm(point.position) == pytest.approx(point.R)

    @allure.title("Direction is undefined at t = 0")
    def test_degenerate_time(self):
        with pytest.raises(DegenerateTime):
            nodal_direction(0.0)
        with pytest.raises(DegenerateTime):
            nodal_point(0.0, 1.0)

    @allure.title("Reference keeps the sign continuous along a path")
    def test_path_continuity(self):
        times = np.arange(1.0, 30.0, 0.01)
        path = nodal_path(times, 4.23)
        directions = np.array([point.direction for point in path])
        assert np.all(np.sum(directions[1:] * directions[:-1], axis=1) > 0)

        flipped = nodal_direction(2.0, reference=-nodal_direction(2.0))
        np.testing.assert_allclose(flipped, -nodal_direction(2.0))

    @pytest.mark.regression
    @allure.title("Analytic kinematics match finite differences")
    def test_kinematics(self, rng):
        h = 1e-5
        for _ in range(20):
            t, R = rng.uniform(0.5, 40.0), rng.uniform(0.5, 5.0)
            velocity, acceleration = nodal_kinematics(t, R)
            reference = nodal_direction(t)
            plus = nodal_point(t + h, R, reference=reference)
            minus = nodal_point(t - h, R, reference=reference)
            centre = nodal_point(t, R)
            np.testing.assert_allclose(velocity, (plus.position - minus.position) / (2 * h),
                                       rtol=1e-6, atol=1e-6)
            np.testing.assert_allclose(
                acceleration, (plus.position - 2 * centre.position + minus.position) / h ** 2,
                rtol=1e-3, atol=1e-3 * max(1.0, np.abs(acceleration).max()))

    @allure.title("Newton solver recovers the analytic nodal point")
    def test_numeric_node(self, base_state, rng):
        for _ in range(10):
            t, R = rng.uniform(0.5, 20.0), rng.uniform(1.0, 5.0)
            exact = nodal_point(t, R).position
            guess = exact + rng.normal(scale=0.05, size=3)
            guess *= R / np.linalg.norm(guess)
            found = nodal_point_numeric(base_state, t, guess)
            np.testing.assert_allclose(found, exact, atol=1e-8)

    @allure.title("Distance to the node vanishes on the node")
    def test_distance_to_node(self):
        point = nodal_point(3.0, 2.0)
        assert distance_to_node(point.position, 3.0) == pytest.approx(0.0, abs=1e-12)
        assert distance_to_node(-point.position, 3.0) == pytest.approx(0.0, abs=1e-12)


@allure.feature("Nodal Structure")
@allure.story("Comoving Frame")
class TestComovingFrame:

    @pytest.mark.smoke
    @allure.title("Frame matrix is orthogonal with the nodal line as third row")
    def test_frame_matrix(self, rng):
        for _ in range(20):
            t = rng.uniform(0.5, 50.0)
            frame = comoving_frame(t, 3.0)
            np.testing.assert_allclose(frame.S @ frame.S.T, np.eye(3), atol=1e-14)
            assert np.linalg.det(frame.S) == pytest.approx(1.0)
            np.testing.assert_allclose(frame.S[2], nodal_direction(t), atol=1e-12)

    @allure.title("to_frame and to_lab are inverse")
    def test_round_trip(self):
        frame = comoving_frame(2.5, 4.0)
        origin = np.array([0.3, -1.0, 2.0])
        x = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(frame.to_lab(frame.to_frame(x, origin), origin), x)
        np.testing.assert_allclose(frame_matrix(0.0, 0.0)[2], [0.0, 0.0, 1.0])


@allure.feature("Nodal Structure")
@allure.story("Planar Flow")
class TestPlanarFlow:

    @pytest.mark.smoke
    @allure.title("Planar G equals G at the mapped lab point")
    def test_planar_G(self, rng):
        for _ in range(30):
            t, R = rng.uniform(0.5, 30.0), rng.uniform(0.5, 5.0)
            pf = planar_flow(t, R)
            u, v = rng.uniform(-1.0, 1.0, size=2)
            x = pf.frame.to_lab([u, v, 0.0], pf.node.position)
            G = base_flow_coefficients(PhasePoint(x, t)).G
            assert pf.G(u, v) == pytest.approx(G, rel=1e-9, abs=1e-12)
            assert float(x @ density_form(t) @ x) == pytest.approx(G, rel=1e-9, abs=1e-12)

    @pytest.mark.regression
    @allure.title("Planar field is the in-plane part of the comoving field")
    def test_planar_matches_frame_velocity(self, rng):
        for _ in range(30):
            t, R = rng.uniform(0.5, 30.0), rng.uniform(0.5, 5.0)
            pf = planar_flow(t, R)
            u, v = rng.uniform(-1.0, 1.0, size=2)
            full = frame_velocity(t, R, [u, v, 0.0])
            np.testing.assert_allclose(planar_velocity(pf, u, v), full[:2], rtol=1e-8, atol=1e-8)

    @allure.title("Planar Jacobian matches finite differences")
    def test_planar_jacobian(self, rng):
        h = 1e-6
        pf = planar_flow(4.0, 4.23)
        for _ in range(20):
            u, v = rng.uniform(-1.0, 1.0, size=2)
            numeric = np.column_stack([
                (np.array(planar_velocity(pf, u + h, v)) - planar_velocity(pf, u - h, v)) / (2 * h),
                (np.array(planar_velocity(pf, u, v + h)) - planar_velocity(pf, u, v - h)) / (2 * h),
            ])
            np.testing.assert_allclose(planar_jacobian(pf, u, v), numeric, rtol=1e-5, atol=1e-6)

    @allure.title("Planar field is singular at the node")
    def test_node_singular(self):
        with pytest.raises(NearNode):
            planar_velocity(planar_flow(4.0, 4.23), 0.0, 0.0)

    @allure.title("Comoving reduction needs equal masses")
    def test_unequal_masses(self):
        config = OscillatorConfig(masses=(1.0, 2.0, 1.0))
        with pytest.raises(ConfigError):
            planar_flow(4.0, 4.23, config)


@allure.feature("Nodal Structure")
@allure.story("X-points")
class TestXPoint:

    @pytest.mark.regression
    @allure.title("X-points are stationary saddles of the planar flow")
    def test_saddle_grid(self):
        checked = 0
        for t in np.arange(1.0, 10.01, 0.5):
            for R in np.arange(1.0, 5.01, 0.5):
                try:
                    xp = xpoint(t, R)
                except (DegenerateXPoint, DegenerateTime) as e:
                    logger.warning(f"Skipping t={t}, R={R}: {e}")
                    continue
                pf = planar_flow(t, R)
                residual = np.hypot(*planar_velocity(pf, xp.u, xp.v))
                assert residual < 1e-8 * max(1.0, np.hypot(pf.V_u, pf.V_v))
                lam1, lam2 = xp.eigenvalues
                assert lam1 * lam2 < 0
                assert lam1 > lam2
                checked += 1
        assert checked > 100

    @allure.title("Eigenvectors are unit length and oriented to u >= 0")
    def test_eigenvectors(self):
        xp = xpoint(4.0, 4.23)
        for vector, lam in zip(xp.eigenvectors, xp.eigenvalues):
            assert np.linalg.norm(vector) == pytest.approx(1.0)
            assert vector[0] >= 0
            np.testing.assert_allclose(xp.jacobian @ vector, lam * vector, atol=1e-9 * abs(lam) + 1e-12)
        assert xp.a == xp.jacobian[0, 0]
        assert xp.distance_to_node == pytest.approx(np.hypot(xp.u, xp.v))

    @allure.title("Lab position of the X-point lies on its sphere's tangent plane")
    def test_lab_position(self):
        pf = planar_flow(4.0, 4.23)
        xp = xpoint(4.0, 4.23)
        lab = xpoint_lab_position(pf, xp)
        assert (lab - pf.node.position) @ pf.node.direction == pytest.approx(0.0, abs=1e-12)


@allure.feature("Nodal Structure")
@allure.story("Nodal X-point Structure")
class TestFoliation:

    @pytest.mark.smoke
    @allure.title("Foliation builds one layer per radius")
    def test_foliation(self):
        R_grid = [0.5, 1.0, 2.0, 4.0]
        structure = foliation(4.0, R_grid)
        assert [layer.R for layer in structure.layers] == R_grid
        assert structure.node_positions.shape == (4, 3)
        assert structure.xline.shape[1] == 3

        document = structure_to_json(structure)
        assert document["t"] == 4.0
        assert len(document["layers"]) == 4
        assert all("node_xyz" in layer for layer in document["layers"])

    @allure.title("Distance to the structure is zero on an X-point")
    def test_distance_to_structure(self):
        structure = foliation(4.0, [2.0, 3.0])
        point = structure.xline[0]
        assert distance_to_structure(point, 4.0, [2.0, 3.0]) == pytest.approx(0.0, abs=1e-12)

    @allure.title("Non-positive radii are rejected")
    def test_invalid_grid(self):
        with pytest.raises(ValueError):
            foliation(4.0, [1.0, 0.0])
