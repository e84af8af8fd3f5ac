"""Unit tests for the invariant suite."""

import numpy as np
import pytest

from core import validation


@pytest.fixture
def rng():
    return np.random.default_rng(0)


class TestChecks:
    """Each check on its default problem."""

    def test_oracle_equivalence(self, rng):
        result = validation.check_oracle_equivalence(rng, cases=3, n=3)

        assert result.passed, result.details
        assert result.details["cases"] == 3

    def test_kronecker_identity(self):
        assert validation.check_kronecker_identity().passed

    def test_sturm_suite(self):
        result = validation.check_sturm_suite(n=4, s_count=150)

        assert result.passed, result.message
        assert set(result.details) == set(validation.STURM_PRESETS)

    def test_poincare(self, rng):
        result = validation.check_poincare(rng, samples=20)

        assert result.passed
        assert result.details["min_ratio_over_e1"] >= 1.0 - 1e-12

    def test_transverse_modes(self):
        assert validation.check_transverse_modes().passed

    def test_unitarity(self):
        assert validation.check_unitarity().passed

    def test_rotation_orthogonality(self):
        result = validation.check_rotation_orthogonality()

        assert result.passed
        assert result.details["max_det_error"] <= 1e-9

    def test_symmetry_and_bracket(self):
        result = validation.check_symmetry_and_bracket()

        assert result.passed, result.details
        assert result.details["symmetric"]

    def test_thin_tube_bounds(self):
        assert validation.check_thin_tube_bounds().passed

    def test_order_invariance(self):
        assert validation.check_order_invariance().passed

    def test_flat_surface(self):
        result = validation.check_flat_surface()

        assert result.passed
        assert result.details["max_rel_entry_diff"] <= 1e-12


class TestRunValidation:
    def test_subset(self):
        report = validation.run_validation(seed=1, only=["poincare", "transverse_modes"])

        assert [r.name for r in report.results] == ["poincare", "transverse_modes"]
        assert report.passed
        assert report.summary()["checks"]["poincare"]["passed"]

    def test_exception_becomes_failure(self, mocker):
        mocker.patch.object(validation, "check_transverse_modes", side_effect=RuntimeError("boom"))
        report = validation.run_validation(only=["transverse_modes", "kronecker_identity"])

        failed = report.results[0]
        assert not failed.passed
        assert failed.message == "RuntimeError: boom"
        assert report.results[1].passed
        assert not report.passed

    def test_empty_report_does_not_pass(self):
        assert not validation.run_validation(only=["no_such_check"]).passed
