"""Unit tests for curvature presets and sampled curvatures."""

import numpy as np
import pytest

from core import curvature
from core.exceptions import CapabilityError, CurveError


class TestPresets:
    """Closed-form presets and their derivatives."""

    def test_constant(self):
        kappa = curvature.constant(1.5)
        s = np.linspace(0.0, 1.0, 5)

        assert np.all(kappa(s) == 1.5)
        assert np.all(kappa.derivative(s, 1) == 0.0)
        assert np.all(kappa.derivative(s, 2) == 0.0)
        assert kappa.norm(1.0, 2) == pytest.approx(1.5)

    def test_sine_values_and_derivatives(self):
        kappa = curvature.sine(amplitude=2.0, frequency=3.0, phase=0.0, offset=0.5)

        assert kappa(0.0) == pytest.approx(0.5)
        assert kappa.derivative(0.0, 1) == pytest.approx(6.0)
        s = 0.3
        assert kappa.derivative(s, 2) == pytest.approx(-18.0 * np.sin(0.9))

    def test_sine_norm(self):
        kappa = curvature.sine(amplitude=1.0, frequency=1.0)
        # sup|sin| + sup|cos| over a full period
        assert kappa.norm(2 * np.pi, 1) == pytest.approx(2.0)

    def test_bump_support_and_peak(self):
        kappa = curvature.bump(amplitude=0.8, center=1.0, width=0.5)

        assert kappa(1.0) == pytest.approx(0.8)
        assert kappa.derivative(1.0, 1) == pytest.approx(0.0)
        outside = np.array([0.0, 0.4, 1.6, 3.0])
        assert np.all(kappa(outside) == 0.0)
        assert np.all(kappa.derivative(outside, 2) == 0.0)

    def test_bump_derivatives_match_differences(self):
        kappa = curvature.bump(amplitude=1.0, center=1.0, width=0.6)
        s = np.linspace(0.6, 1.4, 9)
        step = 1e-5

        fd1 = (kappa(s + step) - kappa(s - step)) / (2 * step)
        fd2 = (kappa.derivative(s + step, 1) - kappa.derivative(s - step, 1)) / (2 * step)

        np.testing.assert_allclose(kappa.derivative(s, 1), fd1, rtol=1e-5, atol=1e-8)
        np.testing.assert_allclose(kappa.derivative(s, 2), fd2, rtol=1e-5, atol=1e-6)

    def test_bump_rejects_nonpositive_width(self):
        with pytest.raises(CurveError):
            curvature.bump(width=0.0)

    def test_unavailable_derivative_order(self):
        with pytest.raises(CapabilityError):
            curvature.constant(1.0).derivative(0.5, 3)

    def test_from_preset(self):
        kappa = curvature.from_preset("sine", amplitude=0.5)

        assert kappa.kind == "sine"
        assert kappa.params["amplitude"] == 0.5

    def test_unknown_preset(self):
        with pytest.raises(CapabilityError, match="unknown curvature preset"):
            curvature.from_preset("helix")


class TestSampled:
    """Spline curvatures from tabulated data."""

    def test_spline_reproduces_smooth_data(self):
        s = np.linspace(0.0, np.pi, 40)
        kappa = curvature.sampled(s, np.sin(s))
        mid = 0.5 * (s[:-1] + s[1:])

        np.testing.assert_allclose(kappa(mid), np.sin(mid), atol=1e-4)
        np.testing.assert_allclose(kappa.derivative(mid[5:-5], 1), np.cos(mid[5:-5]), atol=1e-3)

    def test_too_few_samples(self):
        with pytest.raises(CurveError):
            curvature.sampled(np.array([0.0, 1.0, 2.0]), np.zeros(3))

    def test_abscissae_must_increase(self):
        with pytest.raises(CurveError):
            curvature.sampled(np.array([0.0, 1.0, 1.0, 2.0]), np.zeros(4))

    def test_load_csv(self, tmp_path):
        s = np.linspace(0.0, 1.0, 11)
        path = tmp_path / "kappa.csv"
        rows = "\n".join(f"{a},{1.0 + a},{0.5}" for a in s)
        path.write_text("# s,kappa1,kappa2\n" + rows + "\n")

        kappas = curvature.load_sampled_csv(path)

        assert len(kappas) == 2
        assert kappas[0](0.55) == pytest.approx(1.55)
        assert kappas[1](0.3) == pytest.approx(0.5)

    def test_load_csv_needs_curvature_column(self, tmp_path):
        path = tmp_path / "s_only.csv"
        path.write_text("0.0\n0.5\n1.0\n1.5\n")

        with pytest.raises(CurveError):
            curvature.load_sampled_csv(path)
