"""Unit tests for nodal sets."""

import numpy as np
import pytest

from core.exceptions import CapabilityError, SturmViolationError
from core.grid import TensorGrid
from core.nodal import (
    NodalData1D,
    count_sign_domains,
    nodal_displacement,
    nodal_points_1d,
    nodal_polyline,
    sign_agreement,
)


@pytest.fixture
def planar_grid():
    return TensorGrid.build(np.pi, 100, (2.0,), 8)


def product_mode(grid, n):
    """φ_n ⊗ 𝒥₁ for the straight tube, flattened in grid order."""
    phi = np.sin(n * grid.s_nodes)
    return phi, np.multiply.outer(phi, np.cos(0.5 * np.pi * grid.t_axes[0])).ravel()


class TestNodalPoints1D:
    def test_single_zero(self, planar_grid):
        phi, _ = product_mode(planar_grid, 2)
        nodal = nodal_points_1d(phi, planar_grid, 2)

        assert nodal.zeros.size == 1
        assert nodal.zeros[0] == pytest.approx(np.pi / 2, abs=1e-3)
        assert nodal.points[0] == 0.0 and nodal.points[-1] == pytest.approx(np.pi)
        assert len(nodal.subintervals) == 2

    def test_wrong_count_raises(self, planar_grid):
        phi, _ = product_mode(planar_grid, 2)

        with pytest.raises(SturmViolationError) as exc_info:
            nodal_points_1d(phi, planar_grid, 3)
        assert exc_info.value.found == 1

    def test_exact_node_zero(self):
        s = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        nodal = nodal_points_1d(np.array([1.0, 0.5, 0.0, -0.5, -1.0]), s, 2)

        assert nodal.zeros.tolist() == [3.0]
        assert nodal.length == pytest.approx(6.0)

    def test_distances(self):
        nodal = NodalData1D(index=2, zeros=np.array([1.0]), length=3.0)

        np.testing.assert_allclose(nodal.distance(np.array([0.5, 2.5])), [0.5, 1.5])
        distances = nodal.distance_to_cell_boundary(np.array([0.25, 2.5]))
        np.testing.assert_allclose(distances, [0.25, 0.5])
        assert nodal.min_gap == pytest.approx(1.0)

    def test_ground_state_has_no_zeros(self):
        nodal = NodalData1D(index=1, zeros=np.array([]), length=1.0)
        assert np.all(np.isinf(nodal.distance(np.array([0.3]))))


class TestSignAgreement:
    """sgn ψ_n against sgn φ_n away from the zeros of φ_n."""

    def test_product_mode_agrees(self, planar_grid):
        phi, psi = product_mode(planar_grid, 2)
        nodal = nodal_points_1d(phi, planar_grid, 2)
        report = sign_agreement(psi, phi, nodal, 0.1, planar_grid)

        assert report.count == 0
        assert report.empirical_margin == 0.0
        assert report.tested > 0

    def test_flipped_node_is_counted(self, planar_grid):
        phi, psi = product_mode(planar_grid, 2)
        nodal = nodal_points_1d(phi, planar_grid, 2)
        psi = psi.copy()
        k = planar_grid.index(10, 3)
        psi[k] = -psi[k]
        report = sign_agreement(psi, phi, nodal, 0.1, planar_grid)

        assert report.count == 1
        assert report.empirical_margin == pytest.approx(
            float(nodal.distance(planar_grid.s_nodes[10:11])[0])
        )


class TestNodalLines:
    def test_displacement_of_product_mode(self, planar_grid):
        phi, psi = product_mode(planar_grid, 3)
        nodal = nodal_points_1d(phi, planar_grid, 3)
        result = nodal_displacement(psi, nodal, planar_grid)

        assert result.value == pytest.approx(0.0, abs=1e-12)
        assert result.flagged_lines == []
        assert len(result.crossings) == 2 * planar_grid.t_counts[0]

    def test_lines_with_wrong_count_are_flagged(self, planar_grid):
        phi, psi = product_mode(planar_grid, 2)
        nodal = nodal_points_1d(phi, planar_grid, 2)
        field = planar_grid.to_field(psi).copy()
        field[:, 0] = np.abs(field[:, 0])
        result = nodal_displacement(field.ravel(), nodal, planar_grid)

        assert result.flagged_lines == [(0,)]

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_sign_domains(self, planar_grid, n):
        _, psi = product_mode(planar_grid, n)
        assert count_sign_domains(psi, planar_grid) == n

    def test_polyline_crosses_the_strip(self, planar_grid):
        _, psi = product_mode(planar_grid, 2)
        line = nodal_polyline(psi, planar_grid)

        assert line.terminations == 2
        assert len(line.paths) == 1
        np.testing.assert_allclose(line.paths[0][:, 0], np.pi / 2, atol=1e-3)

    def test_polyline_needs_planar_grid(self):
        grid = TensorGrid.build(1.0, 10, (1.0, 1.0), 4)

        with pytest.raises(CapabilityError):
            nodal_polyline(np.ones(grid.size), grid)
