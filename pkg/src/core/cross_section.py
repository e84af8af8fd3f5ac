"""Cross-sections ω with closed-form Dirichlet eigenpairs.

Only centred intervals and hyperrectangles are supported. For a box with sides
b₂, …, b_d the eigenfunctions are products of √(2/b) sin(kπ(t + b/2)/b) and the
eigenvalues are Σ (kπ/b)².
"""

import itertools
import logging
from dataclasses import dataclass
from functools import reduce
from typing import List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid

from core.exceptions import CapabilityError, DegenerateInputError, DomainError

logger = logging.getLogger(__name__)

SUPPORTED_KINDS = ("interval", "rectangle")


@dataclass(frozen=True)
class CrossSection:
    """Centred box ω = Π(−b_μ/2, b_μ/2)."""

    kind: str
    sides: Tuple[float, ...]

    def __post_init__(self):
        if self.kind not in SUPPORTED_KINDS:
            raise CapabilityError(
                f"cross-section kind '{self.kind}' is not supported "
                f"(available: {', '.join(SUPPORTED_KINDS)})"
            )
        object.__setattr__(self, "sides", tuple(float(b) for b in self.sides))
        if not self.sides or any(b <= 0 for b in self.sides):
            raise DomainError(f"cross-section sides must be positive, got {self.sides}")
        if self.kind == "interval" and len(self.sides) != 1:
            raise DomainError("an interval cross-section has exactly one side")

    @classmethod
    def interval(cls, scale: float = 1.0) -> "CrossSection":
        """ω = (−scale, scale)."""
        return cls("interval", (2.0 * scale,))

    @classmethod
    def rectangle(cls, sides: Sequence[float]) -> "CrossSection":
        return cls("rectangle", tuple(sides))

    @property
    def t_dim(self) -> int:
        return len(self.sides)

    @property
    def radius(self) -> float:
        """a = sup_{t∈ω}|t|, half the diagonal."""
        return 0.5 * float(np.sqrt(np.sum(np.square(self.sides))))

    def describe(self) -> str:
        return f"{self.kind}({', '.join(f'{b:g}' for b in self.sides)})"


@dataclass(frozen=True)
class TransverseEigenpair:
    """n-th Dirichlet eigenpair (E_n, 𝒥_n) of ω, L²(ω)-normalized."""

    index: int
    value: float
    modes: Tuple[int, ...]
    omega: CrossSection

    def __call__(self, *t: np.ndarray) -> np.ndarray:
        """Evaluate 𝒥_n at transverse coordinates (one array per direction)."""
        if len(t) != self.omega.t_dim:
            raise DomainError(f"expected {self.omega.t_dim} transverse coordinates, got {len(t)}")
        out = 1.0
        for k, b, t_mu in zip(self.modes, self.omega.sides, t):
            out = out * np.sqrt(2.0 / b) * np.sin(k * np.pi * (np.asarray(t_mu) + 0.5 * b) / b)
        return np.asarray(out, dtype=float)

    def normalization_error(self, samples: int = 2001) -> float:
        """|∫_ω 𝒥_n² − 1| by the trapezoidal rule in each direction."""
        total = 1.0
        for k, b in zip(self.modes, self.omega.sides):
            t = np.linspace(-0.5 * b, 0.5 * b, samples)
            f = (2.0 / b) * np.sin(k * np.pi * (t + 0.5 * b) / b) ** 2
            total *= trapezoid(f, t)
        return abs(total - 1.0)


def _sorted_modes(omega: CrossSection, count: int) -> List[Tuple[float, Tuple[int, ...]]]:
    modes = itertools.product(range(1, count + 1), repeat=omega.t_dim)
    pairs = [
        (float(sum((k * np.pi / b) ** 2 for k, b in zip(m, omega.sides))), m) for m in modes
    ]
    pairs.sort()
    return pairs[:count]


def transverse_eigenpair(omega: CrossSection, n: int) -> TransverseEigenpair:
    """n-th eigenpair, eigenvalues sorted non-decreasingly with multiplicity."""
    if n < 1:
        raise DomainError(f"eigenpair index must be at least 1, got {n}")
    value, modes = _sorted_modes(omega, n)[n - 1]
    return TransverseEigenpair(n, value, modes, omega)


def transverse_eigenvalues(omega: CrossSection, count: int) -> np.ndarray:
    return np.array([v for v, _ in _sorted_modes(omega, count)])


def stencil_eigenvalues_1d(m: int, spacing: float) -> np.ndarray:
    """Eigenvalues (2/h²)(1 − cos(kπ/(m+1))) of the (−1, 2, −1)/h² stencil, k = 1..m."""
    k = np.arange(1, m + 1)
    return (2.0 / spacing**2) * (1.0 - np.cos(k * np.pi / (m + 1)))


def discrete_transverse_eigenvalues(omega: CrossSection, t_counts: Sequence[int]) -> np.ndarray:
    """Full sorted spectrum of the discrete −Δ′ on the interior transverse grid."""
    parts = [
        stencil_eigenvalues_1d(m, b / (m + 1)) for m, b in zip(t_counts, omega.sides)
    ]
    total = reduce(lambda acc, lam: np.add.outer(acc, lam).ravel(), parts[1:], parts[0])
    return np.sort(total)


def discrete_e1(omega: CrossSection, t_counts: Sequence[int]) -> float:
    return float(
        sum(stencil_eigenvalues_1d(m, b / (m + 1))[0] for m, b in zip(t_counts, omega.sides))
    )


def laplacian_1d(m: int, spacing: float) -> sp.csr_matrix:
    """Dirichlet (−1, 2, −1)/h² stencil on m interior nodes."""
    main = np.full(m, 2.0 / spacing**2)
    off = np.full(m - 1, -1.0 / spacing**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def transverse_laplacian(omega: CrossSection, t_counts: Sequence[int]) -> sp.csr_matrix:
    """Discrete −Δ′ as a Kronecker sum over transverse directions (first index slowest)."""
    blocks = [laplacian_1d(m, b / (m + 1)) for m, b in zip(t_counts, omega.sides)]
    eyes = [sp.identity(m, format="csr") for m in t_counts]
    total = None
    for mu, block in enumerate(blocks):
        factors = eyes[:mu] + [block] + eyes[mu + 1 :]
        term = reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)
        total = term if total is None else total + term
    return total.tocsr()


def distance_to_boundary(omega: CrossSection, *t: np.ndarray) -> np.ndarray:
    """dist(t, ∂ω) = min over faces of b_μ/2 − |t_μ|."""
    dists = [0.5 * b - np.abs(np.asarray(t_mu)) for b, t_mu in zip(omega.sides, t)]
    return reduce(np.minimum, dists)


def poincare_ratio(omega: CrossSection, psi: np.ndarray) -> float:
    """‖∇ψ‖²/‖ψ‖² with the assembly stencil, ψ given on the interior transverse nodes.

    Forward differences with zero padding reproduce the quadratic form of the
    (−1, 2, −1) stencil exactly.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != omega.t_dim:
        raise DomainError(f"expected a {omega.t_dim}-dimensional sample array, got {psi.ndim}")
    mass = float(np.sum(psi * psi))
    if mass == 0.0:
        raise DegenerateInputError("poincare_ratio needs a function that is not identically zero")
    energy = 0.0
    for mu, b in enumerate(omega.sides):
        h = b / (psi.shape[mu] + 1)
        padded = np.pad(psi, [(1, 1) if ax == mu else (0, 0) for ax in range(psi.ndim)])
        energy += float(np.sum(np.diff(padded, axis=mu) ** 2)) / h**2
    return energy / mass


def boundary_slope_ratio(omega: CrossSection, t_counts: Sequence[int]) -> float:
    """inf over interior nodes of 𝒥₁(t)/dist(t, ∂ω), the measured constant c."""
    pair = transverse_eigenpair(omega, 1)
    axes = [-0.5 * b + (b / (m + 1)) * np.arange(1, m + 1) for m, b in zip(t_counts, omega.sides)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return float(np.min(pair(*mesh) / distance_to_boundary(omega, *mesh)))
