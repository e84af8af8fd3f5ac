"""Measurements on computed eigenpairs: comparison vectors, eigenfunction errors,
Sturm properties of S, unitary reconstruction and log–log rate fits."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from core.cross_section import (
    CrossSection,
    distance_to_boundary,
    stencil_eigenvalues_1d,
    transverse_eigenpair,
)
from core.eigensolve import EigenResult
from core.exceptions import GeometryError, PairingAmbiguityError, RateFitError, SturmViolationError
from core.geometry import JacobianField
from core.grid import TensorGrid
from core.nodal import NodalData1D, nodal_points_1d

logger = logging.getLogger(__name__)

PAIRING_THRESHOLD = 0.5
FLOOR = 1e-8


def fix_phi_sign(phi: np.ndarray) -> np.ndarray:
    """Orient φ_n so that its first non-negligible node value is positive."""
    phi = np.asarray(phi, dtype=float)
    scale = np.max(np.abs(phi))
    if scale == 0.0:
        return phi
    first = phi[np.flatnonzero(np.abs(phi) > 1e-8 * scale)[0]]
    return phi if first > 0 else -phi


def comparison_vector(phi: np.ndarray, omega: CrossSection, grid: TensorGrid) -> np.ndarray:
    """ψ⁰_n = φ_n ⊗ 𝒥₁ on the grid, unit norm in the discrete L² product."""
    j1 = transverse_eigenpair(omega, 1)(*grid.t_mesh)
    psi0 = np.multiply.outer(np.asarray(phi, dtype=float).ravel(), j1).ravel()
    norm = np.sqrt(grid.cell_volume * psi0 @ psi0)
    return psi0 / norm


@dataclass(frozen=True, eq=False)
class PairedEigenvector:
    index: int
    psi: np.ndarray
    psi0: np.ndarray
    overlap: float


def pair_and_sign(
    result: EigenResult, index: int, psi0: np.ndarray, grid: TensorGrid
) -> PairedEigenvector:
    """Match ψ_n (1-based ``index``) with ψ⁰_n, normalize both and make the overlap positive."""
    w = grid.cell_volume
    psi = result.vectors[:, index - 1]
    psi = psi / np.sqrt(w * psi @ psi)
    psi0 = psi0 / np.sqrt(w * psi0 @ psi0)
    overlap = float(w * psi @ psi0)
    if abs(overlap) < PAIRING_THRESHOLD:
        raise PairingAmbiguityError(index, overlap)
    if overlap < 0:
        psi, overlap = -psi, -overlap
    return PairedEigenvector(index, psi, psi0, overlap)


def eigenfunction_errors(
    psi: np.ndarray, psi0: np.ndarray, omega: CrossSection, grid: TensorGrid
) -> Tuple[float, float]:
    """sup |ψ_n − ψ⁰_n| and sup |ψ_n − ψ⁰_n| / dist(t, ∂ω) over the grid nodes."""
    diff = np.abs(grid.to_field(psi) - grid.to_field(psi0))
    dist = distance_to_boundary(omega, *grid.t_mesh)
    return float(diff.max()), float(np.max(diff / dist))


@dataclass
class PropertyReport:
    """Outcome of the Sturm checks on the eigenpairs of S."""

    checks: Dict[str, bool] = field(default_factory=dict)
    measurements: Dict[str, float] = field(default_factory=dict)
    nodal: List[NodalData1D] = field(default_factory=list)
    messages: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(self.checks.values())

    def fail(self, name: str, message: str) -> None:
        self.checks[name] = False
        self.messages.append(message)


def verify_sturm_properties(
    s_result: EigenResult,
    grid: TensorGrid,
    v0_sup: float,
    tolerance: float = 1e-3,
) -> PropertyReport:
    """Bracket, simplicity, zero count and spacing, and the slope of φ_n at its zeros.

    The bracket |μ_n − ν_n| ≤ ‖v₀‖_∞ is checked exactly against the discrete free
    eigenvalues ν_n; against (nπ/L)² the discretization error of ν_n plus ``tolerance``
    is allowed.
    """
    report = PropertyReport()
    n_max = s_result.count
    length = grid.length
    mu = s_result.values
    n = np.arange(1, n_max + 1)
    nu = stencil_eigenvalues_1d(grid.s_count, grid.ds)[:n_max]
    exact = (n * np.pi / length) ** 2
    slack = 1e-10 * np.maximum(1.0, np.abs(mu))

    discrete_ok = np.abs(mu - nu) <= v0_sup + slack
    continuum_ok = np.abs(mu - exact) <= v0_sup + np.abs(nu - exact) + tolerance
    report.checks["bracket"] = bool(np.all(discrete_ok & continuum_ok))
    report.measurements["bracket_excess"] = float(np.max(np.abs(mu - nu) - v0_sup))
    if not report.checks["bracket"]:
        bad = [int(k) for k in n[~(discrete_ok & continuum_ok)]]
        report.messages.append(f"eigenvalue bracket violated for n={bad}")

    gaps = np.diff(mu)
    report.checks["simple"] = bool(np.all(gaps > 0)) and not np.any(s_result.clustered)
    report.measurements["min_gap"] = float(gaps.min()) if gaps.size else float("inf")

    report.checks["zero_count"] = True
    spacing, slope = np.inf, np.inf
    for k in n:
        phi = fix_phi_sign(s_result.vectors[:, k - 1])
        try:
            nodal = nodal_points_1d(phi, grid, int(k))
        except SturmViolationError as exc:
            report.fail("zero_count", str(exc))
            continue
        report.nodal.append(nodal)
        spacing = min(spacing, nodal.min_gap)
        dist = nodal.distance_to_cell_boundary(grid.s_nodes)
        away = dist > 1e-12 * length
        slope = min(slope, float(np.min(np.abs(phi[away]) / dist[away])))

    report.checks["zero_spacing"] = bool(spacing > 0)
    report.checks["boundary_slope"] = bool(slope > 0)
    report.measurements["zero_spacing"] = float(spacing)
    report.measurements["boundary_slope_ratio"] = float(slope)
    return report


@dataclass(frozen=True, eq=False)
class Reconstruction:
    """Ψ_n = ε^{−(d−1)/2} h^{−1/2} ψ_n and the norms in both measures."""

    field: np.ndarray
    comparison: Optional[np.ndarray]
    norm_psi: float
    norm_field: float

    @property
    def norm_error(self) -> float:
        return abs(self.norm_field - self.norm_psi)


def reconstruct_laplacian_eigenfunction(
    psi: np.ndarray,
    jf: JacobianField,
    epsilon: float,
    psi0: Optional[np.ndarray] = None,
) -> Reconstruction:
    """Undo the unitary transform ψ ↦ |G|^{1/4}ψ nodewise."""
    if np.any(jf.h <= 0):
        raise GeometryError("cannot reconstruct: h is not positive on the grid")
    grid = jf.grid
    power = 0.5 * (grid.dim - 1)
    scale = epsilon**-power * jf.h**-0.5
    field_ = scale * grid.to_field(psi)
    comparison = None if psi0 is None else scale * grid.to_field(psi0)

    w = grid.cell_volume
    norm_psi = float(np.sqrt(w * np.sum(np.square(psi))))
    norm_field = float(np.sqrt(w * np.sum(field_**2 * epsilon ** (grid.dim - 1) * jf.h)))
    return Reconstruction(field_, comparison, norm_psi, norm_field)


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    intercept: float
    used: int
    dropped: int


def fit_rate(points: Sequence[Tuple[float, float]]) -> RateFit:
    """Least-squares slope of log(metric) against log(ε)."""
    eps = np.array([p[0] for p in points], dtype=float)
    metric = np.array([p[1] for p in points], dtype=float)
    keep = np.isfinite(metric) & (metric > 0) & (eps > 0)
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        logger.info(f"fit_rate: dropped {dropped} nonpositive or non-finite points")
    if np.count_nonzero(keep) < 3:
        raise RateFitError(f"need at least 3 positive points, have {int(np.count_nonzero(keep))}")
    fit = stats.linregress(np.log(eps[keep]), np.log(metric[keep]))
    return RateFit(
        slope=float(fit.slope),
        stderr=float(fit.stderr),
        intercept=float(fit.intercept),
        used=int(np.count_nonzero(keep)),
        dropped=dropped,
    )
