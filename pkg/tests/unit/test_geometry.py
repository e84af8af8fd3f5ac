"""Unit tests for the curve, the Tang frame and the Jacobian field."""

import numpy as np
import pytest

from core import curvature
from core.exceptions import AssemblyError, CurveError, DomainError, PreconditionError
from core.geometry import (
    CurveSpec,
    check_immersion,
    frenet_matrix,
    frenet_stack,
    jacobian_field,
    solve_tang_frame,
    thin_tube_bounds,
)
from core.grid import TensorGrid


class TestCurveSpec:
    """Construction and curvature-class bound."""

    def test_measured_bound(self, constant_curve):
        assert constant_curve.c_gamma == pytest.approx(1.0)
        assert not constant_curve.is_straight()

    def test_straight(self, straight_curve):
        assert straight_curve.is_straight()
        assert straight_curve.c_gamma == 0.0

    def test_wrong_number_of_higher_curvatures(self):
        with pytest.raises(CurveError, match="higher curvatures"):
            CurveSpec(dim=3, length=1.0, kappa1=curvature.constant(1.0))

    def test_nonpositive_length(self):
        with pytest.raises(CurveError):
            CurveSpec(dim=2, length=0.0, kappa1=curvature.constant(1.0))

    def test_declared_bound_too_small(self):
        with pytest.raises(CurveError, match="curvature class bound"):
            CurveSpec(dim=2, length=1.0, kappa1=curvature.constant(2.0), c_gamma=1.0)


class TestFrenetMatrix:
    def test_band_structure(self, space_curve):
        k = frenet_matrix(space_curve, 0.4).entries

        assert k.shape == (3, 3)
        assert k[0, 1] == pytest.approx(space_curve.kappa1(0.4))
        assert k[1, 2] == pytest.approx(0.5)
        np.testing.assert_allclose(k, -k.T)
        assert k[0, 2] == 0.0

    def test_prime_block(self, space_curve):
        fm = frenet_matrix(space_curve, 1.0)
        assert fm.prime.shape == (2, 2)
        assert fm.dim == 3

    def test_out_of_range(self, constant_curve):
        with pytest.raises(DomainError):
            frenet_stack(constant_curve, [4.0])


class TestTangFrame:
    """Rotation R′ solving Ṙ′ = −R′K′."""

    def test_planar_frame_is_trivial(self, constant_curve):
        rot = solve_tang_frame(constant_curve, 50)

        assert rot.matrices.shape == (51, 1, 1)
        np.testing.assert_allclose(rot.matrices[:, 0, 0], 1.0)

    def test_constant_torsion_closed_form(self):
        tau = 0.7
        curve = CurveSpec(
            dim=3,
            length=2.0,
            kappa1=curvature.constant(1.0),
            higher_kappas=(curvature.constant(tau),),
        )
        rot = solve_tang_frame(curve, 200)
        s = rot.s_grid[-1]
        expected = np.array(
            [[np.cos(tau * s), -np.sin(tau * s)], [np.sin(tau * s), np.cos(tau * s)]]
        )

        np.testing.assert_allclose(rot.matrices[-1], expected, atol=1e-9)
        assert np.max(rot.orthogonality_defect()) < 1e-9

    def test_too_few_steps(self, constant_curve):
        with pytest.raises(DomainError):
            solve_tang_frame(constant_curve, 1)

    def test_lookup_requires_samples(self, constant_curve):
        rot = solve_tang_frame(constant_curve, 10)

        assert rot.at(np.array([rot.s_grid[3]])).shape == (1, 1, 1)
        with pytest.raises(AssemblyError):
            rot.at(np.array([0.5 * (rot.s_grid[3] + rot.s_grid[4])]))


class TestImmersion:
    def test_threshold(self, constant_curve):
        report = check_immersion(constant_curve, 1.0, 0.5)

        assert report.threshold == pytest.approx(1.0)
        assert report.passed
        assert report.lower == pytest.approx(0.5)
        assert report.upper == pytest.approx(1.5)

    def test_violation(self, constant_curve):
        assert not check_immersion(constant_curve, 1.0, 1.0).passed

    def test_straight_curve_has_no_threshold(self, straight_curve):
        assert check_immersion(straight_curve, 1.0, 10.0).threshold == np.inf


class TestJacobianField:
    """Closed-form h and its derivatives."""

    def test_planar_constant_curvature(self, constant_curve, interval):
        grid = TensorGrid.build(constant_curve.length, 20, interval.sides, 8)
        rot = solve_tang_frame(constant_curve, grid.s_count + 1)
        jf = jacobian_field(constant_curve, rot, 0.1, grid)
        t = grid.t_mesh[0]

        np.testing.assert_allclose(jf.h, 1.0 - 0.1 * t, atol=1e-14)
        np.testing.assert_allclose(jf.d1h, 0.0, atol=1e-14)
        np.testing.assert_allclose(jf.d11h, 0.0, atol=1e-14)
        np.testing.assert_allclose(jf.grad_t[0], -0.1, atol=1e-14)
        assert jf.h_mid.shape == (grid.s_count + 1, 8)

    def test_derivatives_match_differences(self, sine_curve, interval):
        grid = TensorGrid.build(sine_curve.length, 399, interval.sides, 6)
        rot = solve_tang_frame(sine_curve, grid.s_count + 1)
        jf = jacobian_field(sine_curve, rot, 0.2, grid)

        fd1 = (jf.h[2:] - jf.h[:-2]) / (2 * grid.ds)
        fd2 = (jf.h[2:] - 2 * jf.h[1:-1] + jf.h[:-2]) / grid.ds**2
        np.testing.assert_allclose(jf.d1h[1:-1], fd1, atol=1e-4)
        np.testing.assert_allclose(jf.d11h[1:-1], fd2, atol=1e-4)

    def test_derivatives_converge_at_second_order(self):
        """d=3, κ₁ = sin(πs/L), κ₂ = 1: difference quotients of h reach ∂₁h and ∂₁²h at O(Δs²)."""
        curve = CurveSpec(
            dim=3,
            length=np.pi,
            kappa1=curvature.sine(amplitude=1.0, frequency=1.0),
            higher_kappas=(curvature.constant(1.0),),
        )
        errors = []
        for m in (39, 79, 159):
            grid = TensorGrid.build(curve.length, m, (2.0, 2.0), 5)
            rot = solve_tang_frame(curve, 4 * (grid.s_count + 1))
            jf = jacobian_field(curve, rot, 0.1, grid)
            fd1 = (jf.h[2:] - jf.h[:-2]) / (2 * grid.ds)
            fd2 = (jf.h[2:] - 2 * jf.h[1:-1] + jf.h[:-2]) / grid.ds**2
            errors.append(
                [np.max(np.abs(jf.d1h[1:-1] - fd1)), np.max(np.abs(jf.d11h[1:-1] - fd2))]
            )
        errors = np.array(errors)

        orders = np.log2(errors[:-1] / errors[1:])
        assert np.all(orders >= 1.9)

    def test_rejects_thick_tube(self, constant_curve, interval):
        grid = TensorGrid.build(constant_curve.length, 10, interval.sides, 4)
        rot = solve_tang_frame(constant_curve, grid.s_count + 1)

        with pytest.raises(PreconditionError):
            jacobian_field(constant_curve, rot, 1.0, grid)

    def test_dimension_mismatch(self, constant_curve):
        grid = TensorGrid.build(constant_curve.length, 10, (1.0, 1.0), 4)
        rot = solve_tang_frame(constant_curve, grid.s_count + 1)

        with pytest.raises(AssemblyError):
            jacobian_field(constant_curve, rot, 0.1, grid)

    def test_thin_tube_bounds_hold(self, space_curve, tube_factory):
        _, jf, _ = tube_factory(space_curve, _square(), 0.1, 30, 6)
        bounds = thin_tube_bounds(space_curve, jf)

        assert bounds.passed
        assert bounds.one_minus_h2 > 0.0


def _square():
    from core.cross_section import CrossSection

    return CrossSection.rectangle((1.0, 1.0))
