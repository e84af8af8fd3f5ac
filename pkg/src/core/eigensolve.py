"""Lowest eigenpairs of the assembled operators.

Large problems use shift-invert Lanczos (ARPACK through ``scipy.sparse.linalg.eigsh``)
around the operator's lower bound with a sparse LU factorization; small ones and the
validation oracle use a dense symmetric eigendecomposition.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from core.exceptions import ArgumentError, CapabilityError
from core.operators import DiscreteOperator

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4000
CLUSTER_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Eigenvalues in non-decreasing order with discrete-L²-normalized eigenvectors.

    ``vectors`` has one column per eigenpair; ``residuals`` are Euclidean norms of
    A u − σ u for the Euclidean unit vector u.
    """

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    clustered: np.ndarray
    iterations: int
    method: str
    weight: float
    sigma: Optional[float] = None
    seed: Optional[int] = None
    tol: float = 1e-9

    @property
    def count(self) -> int:
        return int(self.values.size)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def inner(self, i: int, j: int) -> float:
        return float(self.weight * self.vectors[:, i] @ self.vectors[:, j])

    def is_simple(self, k: int) -> bool:
        """Pair k (0-based) converged and not part of a flagged cluster."""
        return bool(self.converged[k] and not self.clustered[k])

    def summary(self) -> dict:
        return {
            "method": self.method,
            "count": self.count,
            "iterations": self.iterations,
            "sigma": self.sigma,
            "seed": self.seed,
            "max_residual": float(self.residuals.max()) if self.count else None,
            "all_converged": self.all_converged,
            "clustered": [int(k) + 1 for k in np.flatnonzero(self.clustered)],
        }


def _cluster_flags(values: np.ndarray) -> np.ndarray:
    flags = np.zeros(values.size, dtype=bool)
    for k in range(values.size - 1):
        if values[k + 1] - values[k] < CLUSTER_TOL * max(1.0, abs(values[k])):
            flags[k] = flags[k + 1] = True
    return flags


def _finish(
    op: DiscreteOperator,
    values: np.ndarray,
    unit_vectors: np.ndarray,
    tol: float,
    iterations: int,
    method: str,
    sigma: Optional[float] = None,
    seed: Optional[int] = None,
) -> EigenResult:
    order = np.argsort(values, kind="stable")
    values = np.asarray(values)[order]
    unit_vectors = np.asarray(unit_vectors)[:, order]

    a = op.matrix
    residuals = np.linalg.norm(a @ unit_vectors - unit_vectors * values, axis=0)
    norm_inf = float(np.max(np.asarray(abs(a).sum(axis=1)))) if a.nnz else 0.0
    floor = 100.0 * np.finfo(float).eps * norm_inf
    converged = residuals <= tol * np.maximum(1.0, np.abs(values)) + floor
    clustered = _cluster_flags(values)
    if np.any(clustered):
        logger.warning(
            f"{op.kind}: clustered eigenvalues at indices "
            f"{[int(k) + 1 for k in np.flatnonzero(clustered)]}"
        )

    return EigenResult(
        values=values,
        vectors=unit_vectors / np.sqrt(op.weight),
        residuals=residuals,
        converged=converged,
        clustered=clustered,
        iterations=int(iterations),
        method=method,
        weight=op.weight,
        sigma=sigma,
        seed=seed,
        tol=tol,
    )


def _dense(op: DiscreteOperator, n: int, tol: float, method: str) -> EigenResult:
    values, vectors = scipy.linalg.eigh(op.matrix.toarray(), subset_by_index=[0, n - 1])
    return _finish(op, values, vectors, tol, 0, method)


def lowest_eigenpairs(
    op: DiscreteOperator,
    n: int,
    tol: float = 1e-9,
    seed: int = 0,
    max_iter: Optional[int] = None,
) -> EigenResult:
    """The n smallest eigenpairs, deterministic for a fixed seed.

    Operators of dimension below max(4n, 64) are solved densely: the 4n part covers
    n > dim/4 and the floor of 64 applies for any n. Larger operators use ARPACK in
    shift-invert mode about the lower bound of the operator.
    """
    dim = op.dimension
    if n < 1:
        raise ArgumentError(f"number of eigenpairs must be at least 1, got {n}")
    if tol <= 0:
        raise ArgumentError(f"tolerance must be positive, got {tol}")
    if n > dim:
        raise ArgumentError(f"cannot compute {n} eigenpairs of a {dim}-dimensional operator")

    if dim < max(4 * n, 64):
        logger.debug(f"{op.describe()}: small problem, using dense path")
        return _dense(op, n, tol, "dense")

    sigma = op.lower_bound
    shifted = (op.matrix - sigma * sp.identity(dim, format="csr")).tocsc()
    lu = splu(shifted)
    calls = [0]

    def apply_inverse(x):
        calls[0] += 1
        return lu.solve(np.asarray(x, dtype=float).ravel())

    inverse = LinearOperator((dim, dim), matvec=apply_inverse, dtype=float)
    start = np.random.default_rng(seed).standard_normal(dim)

    try:
        theta, vectors = eigsh(inverse, k=n, which="LM", v0=start, maxiter=max_iter, tol=0.0)
    except ArpackNoConvergence as exc:
        logger.warning(
            f"{op.describe()}: ARPACK returned {len(exc.eigenvalues)} of {n} pairs before giving up"
        )
        theta, vectors = exc.eigenvalues, exc.eigenvectors
        if len(theta) == 0:
            values = np.full(n, np.nan)
            return EigenResult(
                values=values,
                vectors=np.zeros((dim, n)),
                residuals=np.full(n, np.inf),
                converged=np.zeros(n, dtype=bool),
                clustered=np.zeros(n, dtype=bool),
                iterations=calls[0],
                method="shift-invert",
                weight=op.weight,
                sigma=sigma,
                seed=seed,
                tol=tol,
            )

    values = sigma + 1.0 / np.asarray(theta)
    result = _finish(op, values, vectors, tol, calls[0], "shift-invert", sigma, seed)
    logger.debug(
        f"{op.describe()}: {result.count} pairs, sigma={sigma:.6g}, "
        f"{result.iterations} solves, max residual {result.residuals.max():.2e}"
    )
    return result


def dense_oracle(op: DiscreteOperator, n: Optional[int] = None) -> EigenResult:
    """Reference eigenpairs from a full dense symmetric eigendecomposition."""
    dim = op.dimension
    if dim > DENSE_LIMIT:
        raise CapabilityError(f"dense oracle is limited to dimension {DENSE_LIMIT}, got {dim}")
    n = dim if n is None else n
    if not 1 <= n <= dim:
        raise ArgumentError(f"cannot compute {n} eigenpairs of a {dim}-dimensional operator")
    return _dense(op, n, 1e-9, "dense-oracle")
