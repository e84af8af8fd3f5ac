"""Finite-difference assembly of T, T₀, S, H and of the bracketing operators T±.

All operators act on the interior nodes of a ``TensorGrid`` (s slowest). The
longitudinal term −∂₁a∂₁ is discretized in flux form with a at the s-midpoints, the
transverse Laplacian with the usual (−1, 2, −1) stencil in each direction. Matrices are
built as strict lower triangle L plus diagonal D and stored as L + D + Lᵀ, so every
assembled matrix equals its transpose entry for entry.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from core.cross_section import CrossSection, discrete_e1, transverse_eigenpair, transverse_laplacian
from core.exceptions import ArgumentError, AssemblyError, GeometryError
from core.geometry import CurveSpec, JacobianField
from core.grid import TensorGrid

logger = logging.getLogger(__name__)

E1_SHIFTS = ("analytic", "discrete")


@dataclass(frozen=True, eq=False)
class PotentialField:
    """V on the grid nodes (``values``) and v₀ on the s-nodes (``v0``)."""

    v0: np.ndarray
    values: Optional[np.ndarray] = None

    @property
    def v0_sup(self) -> float:
        return float(np.max(np.abs(self.v0))) if self.v0.size else 0.0

    def broadcast_v0(self, shape: Tuple[int, ...]) -> np.ndarray:
        """v₀ ⊗ 1 on a grid of the given shape."""
        return np.broadcast_to(self.v0.reshape((-1,) + (1,) * (len(shape) - 1)), shape)

    def deviation(self) -> float:
        """‖V − v₀ ⊗ 1‖_∞."""
        if self.values is None:
            return 0.0
        return float(np.max(np.abs(self.values - self.broadcast_v0(self.values.shape))))


def effective_potential(curve: CurveSpec, s_grid: Union[TensorGrid, np.ndarray]) -> PotentialField:
    """v₀ = −κ₁²/4 on the s-nodes."""
    s = s_grid.s_nodes if isinstance(s_grid, TensorGrid) else np.asarray(s_grid, dtype=float)
    return PotentialField(v0=-0.25 * curve.kappa1(s) ** 2)


def _require_positive(jf: JacobianField) -> None:
    if np.any(jf.h <= 0):
        raise GeometryError("h must be positive on the grid (immersion condition violated)")


def full_potential(jf: JacobianField, curve: CurveSpec) -> PotentialField:
    """V = −κ₁²/(4h²) + ∂₁²h/(2h³) − (5/4)(∂₁h)²/h⁴ for tubes."""
    _require_positive(jf)
    h = jf.h
    kappa = jf.kappa1.reshape((-1,) + (1,) * (h.ndim - 1))
    values = -0.25 * kappa**2 / h**2 + 0.5 * jf.d11h / h**3 - 1.25 * jf.d1h**2 / h**4
    return PotentialField(v0=effective_potential(curve, jf.grid).v0, values=values)


def general_potential(jf: JacobianField, v0: np.ndarray) -> PotentialField:
    """V for an arbitrary Jacobian h, including the transverse-derivative terms.

    V = −(5/4)(∂₁h)²/h⁴ + ∂₁²h/(2h³) − |∇′h|²/(4ε²h²) + Δ′h/(2ε²h).
    """
    _require_positive(jf)
    h, eps2 = jf.h, jf.epsilon**2
    grad2 = sum(g * g for g in jf.grad_t) if jf.grad_t else np.zeros_like(h)
    values = (
        -1.25 * jf.d1h**2 / h**4
        + 0.5 * jf.d11h / h**3
        - 0.25 * grad2 / (eps2 * h**2)
        + 0.5 * jf.lap_t / (eps2 * h)
    )
    return PotentialField(v0=np.asarray(v0, dtype=float), values=values)


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Sparse symmetric matrix for one of T, T₀, S, H, T−, T+."""

    kind: str
    matrix: sp.csr_matrix
    grid: TensorGrid
    epsilon: Optional[float] = None
    e1_mode: Optional[str] = None
    e1_shift: float = 0.0
    e1_discrete: float = 0.0
    lower_bound: float = 0.0

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def weight(self) -> float:
        """Cell volume of the discrete L² inner product."""
        return self.grid.cell_volume

    @property
    def transverse_offset(self) -> float:
        """ε⁻²(E₁,h − E_shift), the bottom of the shifted discrete transverse spectrum."""
        if self.epsilon is None:
            return 0.0
        return (self.e1_discrete - self.e1_shift) / self.epsilon**2

    @classmethod
    def from_matrix(cls, matrix, kind: str = "A") -> "DiscreteOperator":
        """Wrap a plain symmetric matrix (unit weight, Gershgorin lower bound)."""
        matrix = sp.csr_matrix(matrix, dtype=float)
        n = matrix.shape[0]
        if matrix.shape != (n, n) or n < 1:
            raise ArgumentError(f"expected a nonempty square matrix, got shape {matrix.shape}")
        diag = matrix.diagonal()
        radius = np.asarray(abs(matrix).sum(axis=1)).ravel() - np.abs(diag)
        grid = TensorGrid(float(n + 1), n, (), ())
        return cls(
            kind=kind, matrix=matrix, grid=grid, lower_bound=float(np.min(diag - radius)) - 1.0
        )

    def is_symmetric(self) -> bool:
        return (self.matrix != self.matrix.T).nnz == 0

    def describe(self) -> str:
        eps = "" if self.epsilon is None else f", eps={self.epsilon:g}"
        return f"{self.kind}[{self.grid.describe()}{eps}, nnz={self.matrix.nnz}]"


def _e1_values(omega: CrossSection, grid: TensorGrid, e1_shift: str) -> Tuple[float, float]:
    if e1_shift not in E1_SHIFTS:
        raise ArgumentError(f"e1_shift must be one of {E1_SHIFTS}, got '{e1_shift}'")
    e1_disc = discrete_e1(omega, grid.t_counts)
    if e1_shift == "analytic":
        return transverse_eigenpair(omega, 1).value, e1_disc
    return e1_disc, e1_disc


def _check_layout(omega: CrossSection, grid: TensorGrid) -> None:
    if grid.s_count < 1:
        raise AssemblyError("grid has no longitudinal nodes")
    if len(omega.sides) != len(grid.sides) or not np.allclose(omega.sides, grid.sides, rtol=1e-14):
        raise AssemblyError(
            f"grid sides {grid.sides} do not match cross-section {omega.describe()}"
        )


def _assemble(
    kind: str,
    grid: TensorGrid,
    a_mid: np.ndarray,
    potential: np.ndarray,
    epsilon: Optional[float] = None,
    omega: Optional[CrossSection] = None,
    e1_shift: float = 0.0,
) -> sp.csr_matrix:
    """Assemble −∂₁a∂₁ + ε⁻²(−Δ′ − e1_shift) + potential as L + D + Lᵀ."""
    n_t, m_s = grid.n_t, grid.s_count
    size = grid.size
    ds2 = grid.ds**2

    a_mid = np.broadcast_to(a_mid, (m_s + 1,) + grid.t_shape)
    diag = ((a_mid[:-1] + a_mid[1:]) / ds2).ravel() + np.asarray(potential, dtype=float).ravel()
    lower = sp.csr_matrix((size, size))
    if m_s > 1:
        lower = lower + sp.diags(
            (-a_mid[1:-1] / ds2).ravel(), -n_t, shape=(size, size), format="csr"
        )

    if omega is not None and grid.t_counts:
        inv_eps2 = 1.0 / epsilon**2
        lt = transverse_laplacian(omega, grid.t_counts)
        eye_s = sp.identity(m_s, format="csr")
        diag = diag + inv_eps2 * (np.tile(lt.diagonal(), m_s) - e1_shift)
        lower = lower + inv_eps2 * sp.kron(eye_s, sp.tril(lt, k=-1), format="csr")

    lower = sp.tril(lower, k=-1).tocsr()
    matrix = (lower + sp.diags(diag, 0, format="csr") + lower.T).tocsr()
    matrix.sort_indices()
    logger.debug(f"assembled {kind}: dim={size}, nnz={matrix.nnz}")
    return matrix


def _lower_bound(potential_min: float, offset: float) -> float:
    return float(potential_min + offset - 1.0)


def assemble_T(
    jf: JacobianField,
    V: PotentialField,
    omega: CrossSection,
    epsilon: float,
    grid: TensorGrid,
    e1_shift: str = "analytic",
) -> DiscreteOperator:
    """T = −∂₁a_ε∂₁ + ε⁻²(−Δ′ − E₁) + V with a_ε = h⁻²."""
    return _assemble_curved("T", jf, V, omega, epsilon, grid, e1_shift, subtract_e1=True)


def assemble_H(
    jf: JacobianField,
    V: PotentialField,
    omega: CrossSection,
    epsilon: float,
    grid: TensorGrid,
    e1_shift: str = "analytic",
) -> DiscreteOperator:
    """H = −∂₁h⁻²∂₁ − ε⁻²Δ′ + V, whose eigenvalues are the Laplacian's λ_n.

    ``e1_shift`` only selects which E₁ is recorded, so that H − T equals ε⁻²E₁ times
    the identity for the T assembled with the same choice.
    """
    return _assemble_curved("H", jf, V, omega, epsilon, grid, e1_shift, subtract_e1=False)


def _assemble_curved(kind, jf, V, omega, epsilon, grid, e1_shift, subtract_e1):
    _check_layout(omega, grid)
    if jf.grid != grid:
        raise AssemblyError(
            f"Jacobian field grid {jf.grid.describe()} differs from {grid.describe()}"
        )
    if not np.isclose(jf.epsilon, epsilon, rtol=1e-14, atol=0.0):
        raise AssemblyError(f"Jacobian field was built for eps={jf.epsilon}, not {epsilon}")
    if V.values is None or V.values.shape != grid.shape:
        raise AssemblyError("potential samples do not match the grid")
    _require_positive(jf)

    shift, e1_disc = _e1_values(omega, grid, e1_shift)
    applied = shift if subtract_e1 else 0.0
    matrix = _assemble(kind, grid, jf.h_mid**-2, V.values, epsilon, omega, applied)
    offset = (e1_disc - applied) / epsilon**2
    return DiscreteOperator(
        kind=kind,
        matrix=matrix,
        grid=grid,
        epsilon=float(epsilon),
        e1_mode=e1_shift,
        e1_shift=applied,
        e1_discrete=e1_disc,
        lower_bound=_lower_bound(float(V.values.min()), offset),
    )


def assemble_T0(
    v0: PotentialField,
    omega: CrossSection,
    epsilon: float,
    grid: TensorGrid,
    e1_shift: str = "analytic",
) -> DiscreteOperator:
    """Decoupled operator S ⊗ 1 + 1 ⊗ ε⁻²(−Δ′ − E₁)."""
    _check_layout(omega, grid)
    if v0.v0.shape != (grid.s_count,):
        raise AssemblyError("v0 samples do not match the s-grid")
    shift, e1_disc = _e1_values(omega, grid, e1_shift)
    potential = v0.broadcast_v0(grid.shape)
    matrix = _assemble("T0", grid, 1.0, potential, epsilon, omega, shift)
    return DiscreteOperator(
        kind="T0",
        matrix=matrix,
        grid=grid,
        epsilon=float(epsilon),
        e1_mode=e1_shift,
        e1_shift=shift,
        e1_discrete=e1_disc,
        lower_bound=_lower_bound(float(v0.v0.min()), (e1_disc - shift) / epsilon**2),
    )


def assemble_S(v0: PotentialField, s_grid: TensorGrid) -> DiscreteOperator:
    """S = −d²/ds² + v₀ with Dirichlet conditions at 0 and L (tridiagonal)."""
    grid = s_grid.longitudinal()
    if v0.v0.shape != (grid.s_count,):
        raise AssemblyError("v0 samples do not match the s-grid")
    matrix = _assemble("S", grid, 1.0, v0.v0)
    return DiscreteOperator(
        kind="S", matrix=matrix, grid=grid, lower_bound=_lower_bound(float(v0.v0.min()), 0.0)
    )


@dataclass(frozen=True)
class AssumptionConstant:
    """Smallest C with inf a ≥ C⁻¹, ‖a − 1‖ + ‖V − V₀‖ ≤ Cε and ‖v₀‖ ≤ C on the grid."""

    value: float
    coefficient_deviation: float
    potential_deviation: float
    inf_coefficient: float
    v0_sup: float
    epsilon: float


def assumption_constant(jf: JacobianField, V: PotentialField) -> AssumptionConstant:
    a_mid = jf.h_mid**-2
    coeff_dev = float(np.max(np.abs(a_mid - 1.0)))
    pot_dev = V.deviation()
    inf_a = float(np.min(a_mid))
    value = max((coeff_dev + pot_dev) / jf.epsilon, 1.0 / inf_a, V.v0_sup)
    return AssumptionConstant(value, coeff_dev, pot_dev, inf_a, V.v0_sup, jf.epsilon)


def assemble_T_bracket(
    jf: JacobianField,
    V: PotentialField,
    omega: CrossSection,
    epsilon: float,
    grid: TensorGrid,
    constant: Optional[float] = None,
    e1_shift: str = "analytic",
) -> Tuple[DiscreteOperator, DiscreteOperator]:
    """T± = (1 ± Cε)(−∂₁² + v₀) + ε⁻²(−Δ′ − E₁) ± C(1 + C)ε, so that T− ≤ T ≤ T+."""
    _check_layout(omega, grid)
    if constant is None:
        constant = assumption_constant(jf, V).value
    c = float(constant)
    shift, e1_disc = _e1_values(omega, grid, e1_shift)
    v0 = V.broadcast_v0(grid.shape)
    offset = (e1_disc - shift) / epsilon**2

    ops = []
    for sign, kind in ((-1.0, "T-"), (1.0, "T+")):
        factor = 1.0 + sign * c * epsilon
        potential = factor * v0 + sign * c * (1.0 + c) * epsilon
        matrix = _assemble(kind, grid, factor, potential, epsilon, omega, shift)
        ops.append(
            DiscreteOperator(
                kind=kind,
                matrix=matrix,
                grid=grid,
                epsilon=float(epsilon),
                e1_mode=e1_shift,
                e1_shift=shift,
                e1_discrete=e1_disc,
                lower_bound=_lower_bound(float(potential.min()), offset),
            )
        )
    return ops[0], ops[1]


def export_coo(op: DiscreteOperator, path: Union[str, Path]) -> Path:
    """Write the matrix as ``i j value`` lines (0-based indices, 17 significant digits)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# {op.describe()} e1_shift={op.e1_shift!r}\n")
        for k in order:
            f.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}\n")
    logger.info(f"Exported {op.describe()} to {path}")
    return path
