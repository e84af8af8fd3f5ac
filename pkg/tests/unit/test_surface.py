"""Unit tests for strips on curved surfaces."""

import numpy as np
import pytest

from core import curvature
from core.exceptions import ArgumentError, AssemblyError, CapabilityError, FocalPointError
from core.geometry import CurveSpec, jacobian_field, solve_tang_frame
from core.grid import TensorGrid
from core.operators import assemble_T, full_potential
from core.surface import (
    SurfaceStripSpec,
    assemble_surface_T,
    gauss_constant,
    gauss_cos,
    gauss_from_preset,
    gauss_product,
    solve_jacobi_h,
    surface_effective_potential,
)


@pytest.fixture
def strip_grid():
    return TensorGrid.build(np.pi, 30, (2.0,), 9)


def make_spec(kappa=None, gauss=None, epsilon=0.1, method="variational"):
    return SurfaceStripSpec(
        length=np.pi,
        kappa=kappa or curvature.constant(0.0),
        gauss=gauss or gauss_constant(0.0),
        epsilon=epsilon,
        derivative_method=method,
    )


class TestGaussCurvature:
    def test_presets(self):
        assert gauss_constant(2.0)(0.3, 0.1) == pytest.approx(2.0)
        assert gauss_cos(2.0, 1.0)(np.pi, 0.5) == pytest.approx(-2.0)
        assert gauss_product(1.0, 0.0, 0.5)(1.0, 1.0) == pytest.approx(1.5)

    def test_s_derivatives(self):
        k = gauss_cos(1.5, 2.0)
        assert k.d_s(0.25, 0.0) == pytest.approx(-3.0 * np.sin(0.5))
        assert k.d_ss(0.25, 0.0) == pytest.approx(-6.0 * np.cos(0.5))

    def test_unknown_preset(self):
        with pytest.raises(CapabilityError):
            gauss_from_preset("saddle")


class TestSurfaceStripSpec:
    def test_invalid_method(self):
        with pytest.raises(ArgumentError):
            make_spec(method="finite")

    def test_invalid_epsilon(self):
        with pytest.raises(ArgumentError):
            make_spec(epsilon=0.0)

    def test_with_epsilon(self):
        spec = make_spec(gauss=gauss_constant(1.0)).with_epsilon(0.05)

        assert spec.epsilon == 0.05
        assert spec.omega.sides == (2.0,)
        assert spec.gauss_sup == pytest.approx(1.0)


class TestJacobiField:
    """h from the Jacobi equation in t."""

    def test_flat_surface_is_affine(self, strip_grid):
        spec = make_spec(kappa=curvature.sine(amplitude=0.8, frequency=1.0))
        jf = solve_jacobi_h(spec, strip_grid)
        s = strip_grid.s_nodes[:, None]
        t = strip_grid.t_axes[0][None, :]

        np.testing.assert_allclose(jf.h, 1.0 - 0.1 * 0.8 * np.sin(s) * t, atol=1e-14)
        np.testing.assert_allclose(jf.d1h, -0.1 * 0.8 * np.cos(s) * t, atol=1e-14)
        np.testing.assert_allclose(jf.lap_t, 0.0)

    def test_constant_gauss_curvature(self, strip_grid):
        jf = solve_jacobi_h(make_spec(gauss=gauss_constant(1.0)), strip_grid)
        t = strip_grid.t_axes[0][None, :]

        np.testing.assert_allclose(jf.h, np.broadcast_to(np.cos(0.1 * t), jf.h.shape), atol=1e-10)
        np.testing.assert_allclose(
            jf.grad_t[0], -0.1 * np.sin(0.1 * t) * np.ones_like(jf.h), atol=1e-10
        )
        np.testing.assert_allclose(jf.lap_t, -0.01 * jf.h)
        np.testing.assert_allclose(jf.d1h, 0.0, atol=1e-14)

    def test_spline_derivatives_agree(self):
        grid = TensorGrid.build(np.pi, 200, (2.0,), 9)
        base = make_spec(
            kappa=curvature.sine(amplitude=0.5), gauss=gauss_cos(2.0, 1.0), epsilon=0.2
        )
        variational = solve_jacobi_h(base, grid)
        spline = solve_jacobi_h(make_spec(base.kappa, base.gauss, 0.2, "spline"), grid)

        np.testing.assert_allclose(spline.d1h, variational.d1h, atol=1e-4)
        np.testing.assert_allclose(spline.d11h[5:-5], variational.d11h[5:-5], atol=1e-3)

    def test_focal_point(self, strip_grid):
        with pytest.raises(FocalPointError):
            solve_jacobi_h(make_spec(gauss=gauss_constant(400.0)), strip_grid)

    def test_grid_must_cover_unit_interval(self):
        grid = TensorGrid.build(np.pi, 20, (1.0,), 8)

        with pytest.raises(AssemblyError):
            solve_jacobi_h(make_spec(), grid)


class TestStripOperator:
    def test_effective_potential(self, strip_grid):
        spec = make_spec(kappa=curvature.constant(1.0), gauss=gauss_constant(1.0))
        v0 = surface_effective_potential(spec, strip_grid)

        np.testing.assert_allclose(v0.v0, -0.75)

    def test_flat_strip_matches_planar_tube(self, strip_grid):
        kappa = curvature.sine(amplitude=0.8, frequency=1.0, phase=0.5)
        curve = CurveSpec(dim=2, length=np.pi, kappa1=kappa)
        rot = solve_tang_frame(curve, strip_grid.s_count + 1)
        jf = jacobian_field(curve, rot, 0.1, strip_grid)
        planar = assemble_T(jf, full_potential(jf, curve), curve_omega(), 0.1, strip_grid).matrix
        strip = assemble_surface_T(make_spec(kappa=kappa), strip_grid).matrix

        assert abs(planar - strip).max() <= 1e-12 * abs(planar).max()


def curve_omega():
    from core.cross_section import CrossSection

    return CrossSection.interval(1.0)
