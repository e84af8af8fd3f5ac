"""Unit tests for the eigensolver."""

import numpy as np
import pytest
import scipy.sparse as sp

from core.cross_section import laplacian_1d
from core.eigensolve import dense_oracle, lowest_eigenpairs
from core.exceptions import ArgumentError, CapabilityError
from core.operators import DiscreteOperator, assemble_T


class TestLowestEigenpairs:
    """Shift-invert and dense paths."""

    def test_diagonal_shift_invert(self):
        op = DiscreteOperator.from_matrix(sp.diags(np.arange(1.0, 101.0)))
        result = lowest_eigenpairs(op, 3, seed=1)

        assert result.method == "shift-invert"
        np.testing.assert_allclose(result.values, [1.0, 2.0, 3.0], rtol=1e-12)
        assert result.all_converged
        assert result.iterations > 0

    def test_small_problem_uses_dense_path(self):
        op = DiscreteOperator.from_matrix(sp.diags(np.arange(1.0, 11.0)))
        result = lowest_eigenpairs(op, 2)

        assert result.method == "dense"
        np.testing.assert_allclose(result.values, [1.0, 2.0])

    @pytest.mark.parametrize(
        "dim, n, method",
        [(63, 1, "dense"), (64, 1, "shift-invert"), (100, 25, "shift-invert"), (100, 26, "dense")],
    )
    def test_dense_threshold(self, dim, n, method):
        """Dense below max(4n, 64), shift-invert from there on."""
        op = DiscreteOperator.from_matrix(sp.diags(np.arange(1.0, dim + 1.0)))

        assert lowest_eigenpairs(op, n, seed=0).method == method

    def test_matches_dense_oracle(self):
        op = DiscreteOperator.from_matrix(laplacian_1d(300, 1.0 / 301))
        fast = lowest_eigenpairs(op, 4, seed=3)
        reference = dense_oracle(op, 4)

        np.testing.assert_allclose(fast.values, reference.values, rtol=1e-10)

    def test_deterministic_for_fixed_seed(self):
        op = DiscreteOperator.from_matrix(laplacian_1d(200, 0.01))
        first = lowest_eigenpairs(op, 3, seed=42)
        second = lowest_eigenpairs(op, 3, seed=42)

        assert np.array_equal(first.values, second.values)
        assert np.array_equal(first.vectors, second.vectors)

    def test_discrete_normalization(self, constant_curve, interval, tube_factory):
        grid, jf, V = tube_factory(constant_curve, interval, 0.1, 30, 8)
        T = assemble_T(jf, V, interval, 0.1, grid)
        result = lowest_eigenpairs(T, 3)

        assert result.inner(0, 0) == pytest.approx(1.0)
        assert result.inner(0, 1) == pytest.approx(0.0, abs=1e-9)
        assert result.weight == pytest.approx(grid.cell_volume)
        assert np.all(result.values >= T.lower_bound)

    def test_cluster_flags(self):
        op = DiscreteOperator.from_matrix(sp.diags([1.0, 1.0, 2.0, 3.0]))
        result = lowest_eigenpairs(op, 3)

        assert list(result.clustered) == [True, True, False]
        assert not result.is_simple(0)
        assert result.is_simple(2)
        assert result.summary()["clustered"] == [1, 2]

    @pytest.mark.parametrize("n,tol", [(0, 1e-9), (2, 0.0), (11, 1e-9)])
    def test_invalid_arguments(self, n, tol):
        op = DiscreteOperator.from_matrix(sp.diags(np.arange(1.0, 11.0)))

        with pytest.raises(ArgumentError):
            lowest_eigenpairs(op, n, tol=tol)


class TestDenseOracle:
    def test_full_spectrum(self):
        op = DiscreteOperator.from_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))

        np.testing.assert_allclose(dense_oracle(op).values, [1.0, 3.0])

    def test_dimension_limit(self):
        op = DiscreteOperator.from_matrix(sp.identity(4001, format="csr"))

        with pytest.raises(CapabilityError):
            dense_oracle(op, 1)
