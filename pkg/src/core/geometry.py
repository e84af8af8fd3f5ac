"""Intrinsic geometry of the reference curve and of the tube built around it.

The curve enters only through its curvatures κ₁, …, κ_{d−1}. From them we assemble the
Serret–Frenet matrix K(s), integrate the Tang-frame rotation R′ (Ṙ′ = −R′K′, R′(0) = 1)
and evaluate the Jacobian h(s, t) = 1 − ε κ₁(s) Σ_μ R_{μ2}(s) t_μ together with its
first two s-derivatives in closed form.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.curvature import CurvatureFunction
from core.exceptions import AssemblyError, CurveError, DomainError, GeometryError, PreconditionError
from core.grid import TensorGrid

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-9
DRIFT_WARNING = 1e-6


@dataclass(frozen=True)
class CurveSpec:
    """Reference curve Γ in ℝᵈ given by its curvature functions on [0, L]."""

    dim: int
    length: float
    kappa1: CurvatureFunction
    higher_kappas: Tuple[CurvatureFunction, ...] = ()
    c_gamma: Optional[float] = None

    def __post_init__(self):
        if self.dim < 2:
            raise CurveError(f"dimension must be at least 2, got {self.dim}")
        if self.length <= 0:
            raise CurveError(f"length must be positive, got {self.length}")
        object.__setattr__(self, "higher_kappas", tuple(self.higher_kappas))
        if len(self.higher_kappas) != self.dim - 2:
            raise CurveError(
                f"a curve in dimension {self.dim} needs {self.dim - 2} higher curvatures, "
                f"got {len(self.higher_kappas)}"
            )
        measured = self.measured_bound()
        if self.c_gamma is None:
            object.__setattr__(self, "c_gamma", measured)
        elif measured > self.c_gamma * (1.0 + 1e-12):
            raise CurveError(
                f"curvature class bound violated: measured {measured:.6g} "
                f"> c_gamma {self.c_gamma:.6g}"
            )

    @property
    def kappas(self) -> Tuple[CurvatureFunction, ...]:
        return (self.kappa1,) + self.higher_kappas

    def measured_bound(self, samples: int = 2001) -> float:
        """max(‖κ₁‖_{C²}, ‖κ_μ‖_{C¹}) sampled on a fine grid."""
        norms = [self.kappa1.norm(self.length, 2, samples)]
        norms += [k.norm(self.length, 1, samples) for k in self.higher_kappas]
        return float(max(norms))

    def is_straight(self) -> bool:
        s = np.linspace(0.0, self.length, 257)
        return bool(np.all(self.kappa1(s) == 0.0))


@dataclass(frozen=True, eq=False)
class FrenetMatrix:
    """Skew-symmetric band matrix K(s) of the Serret–Frenet formulae."""

    entries: np.ndarray

    @property
    def prime(self) -> np.ndarray:
        """Lower-right block K′ = (K_{μν})_{μ,ν=2..d}."""
        return self.entries[1:, 1:]

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _check_range(curve: CurveSpec, s: np.ndarray) -> None:
    tol = 1e-12 * curve.length
    if np.any(s < -tol) or np.any(s > curve.length + tol):
        raise DomainError(f"s must lie in [0, {curve.length}]")


def frenet_stack(curve: CurveSpec, s: Sequence[float], order: int = 0) -> np.ndarray:
    """K^{(order)}(s) for an array of arc-length values, shape ``(len(s), d, d)``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    _check_range(curve, s)
    d = curve.dim
    stack = np.zeros((s.size, d, d))
    for i, kappa in enumerate(curve.kappas):
        if order == 2 and i > 0:
            # only κ̈₁ is needed (and available under the curve class)
            continue
        values = kappa.derivative(s, order)
        stack[:, i, i + 1] = values
        stack[:, i + 1, i] = -values
    return stack


def frenet_matrix(curve: CurveSpec, s: float) -> FrenetMatrix:
    """Serret–Frenet matrix K(s) with κ_i = K_{i,i+1}."""
    return FrenetMatrix(frenet_stack(curve, [s])[0])


@dataclass(frozen=True, eq=False)
class RotationPath:
    """Samples of the Tang-frame rotation R′(s) on a uniform grid of [0, L]."""

    s_grid: np.ndarray
    matrices: np.ndarray
    initial: np.ndarray
    max_drift: float = 0.0
    corrections: int = 0
    warnings: List[str] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return self.s_grid.size - 1

    def orthogonality_defect(self) -> np.ndarray:
        """‖R′R′ᵀ − 1‖_F per sample."""
        eye = np.eye(self.matrices.shape[1])
        prod = np.einsum("nij,nkj->nik", self.matrices, self.matrices)
        return np.linalg.norm(prod - eye, axis=(1, 2))

    def at(self, s: np.ndarray) -> np.ndarray:
        """Rotation matrices at arc-length values that are samples of the path."""
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self.s_grid, s), 0, self.s_grid.size - 1)
        left = np.clip(idx - 1, 0, self.s_grid.size - 1)
        pick = np.where(
            np.abs(self.s_grid[left] - s) < np.abs(self.s_grid[idx] - s), left, idx
        )
        tol = 1e-9 * max(1.0, float(self.s_grid[-1]))
        if np.any(np.abs(self.s_grid[pick] - s) > tol):
            raise AssemblyError(
                "grid nodes are not samples of the rotation path; "
                "solve the Tang frame with n_steps = k*(s_count + 1)"
            )
        return self.matrices[pick]


def _polar_projection(r: np.ndarray, max_iter: int = 30) -> np.ndarray:
    """Nearest rotation by iterated averaging of R and R⁻ᵀ."""
    eye = np.eye(r.shape[0])
    for _ in range(max_iter):
        r = 0.5 * (r + np.linalg.inv(r).T)
        if np.linalg.norm(r @ r.T - eye) < 1e-15 * r.shape[0]:
            break
    return r


def solve_tang_frame(curve: CurveSpec, n_steps: int) -> RotationPath:
    """Integrate Ṙ′ = −R′K′ from R′(0) = 1 with classical RK4 on n_steps + 1 samples."""
    if n_steps < 2:
        raise DomainError(f"n_steps must be at least 2, got {n_steps}")

    m = curve.dim - 1
    s_grid = np.linspace(0.0, curve.length, n_steps + 1)
    step = curve.length / n_steps
    half = 0.5 * step
    nodes = np.concatenate([s_grid, s_grid[:-1] + half])
    k_prime = frenet_stack(curve, nodes)[:, 1:, 1:]
    k_at_nodes = k_prime[: n_steps + 1]
    k_at_halves = k_prime[n_steps + 1 :]

    initial = np.eye(m)
    matrices = np.empty((n_steps + 1, m, m))
    matrices[0] = initial
    r = initial.copy()
    eye = np.eye(m)
    max_drift = 0.0
    corrections = 0
    warnings: List[str] = []

    for n in range(n_steps):
        k0, kh, k1 = k_at_nodes[n], k_at_halves[n], k_at_nodes[n + 1]
        a1 = -r @ k0
        a2 = -(r + half * a1) @ kh
        a3 = -(r + half * a2) @ kh
        a4 = -(r + step * a3) @ k1
        r = r + (step / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)

        drift = float(np.linalg.norm(r @ r.T - eye))
        max_drift = max(max_drift, drift)
        if drift > ORTHOGONALITY_TOL:
            if drift > DRIFT_WARNING:
                msg = f"rotation drift {drift:.3e} at s={s_grid[n + 1]:.6g} before correction"
                warnings.append(msg)
                logger.warning(msg)
            r = _polar_projection(r)
            corrections += 1
        matrices[n + 1] = r

    logger.debug(
        f"Tang frame: d={curve.dim}, {n_steps} steps, max drift {max_drift:.2e}, "
        f"{corrections} corrections"
    )
    return RotationPath(s_grid, matrices, initial, max_drift, corrections, warnings)


@dataclass(frozen=True)
class ValidityReport:
    """Bounds 1 ± C_Γ a ε on h and the immersion threshold ε* = (C_Γ a)⁻¹."""

    lower: float
    upper: float
    threshold: float
    epsilon: float
    passed: bool


def check_immersion(curve: CurveSpec, omega_radius: float, epsilon: float) -> ValidityReport:
    """Check ε < (C_Γ a)⁻¹, the condition under which h does not vanish."""
    spread = curve.c_gamma * omega_radius
    threshold = np.inf if spread == 0 else 1.0 / spread
    return ValidityReport(
        lower=1.0 - spread * epsilon,
        upper=1.0 + spread * epsilon,
        threshold=float(threshold),
        epsilon=float(epsilon),
        passed=bool(epsilon < threshold),
    )


@dataclass(frozen=True, eq=False)
class JacobianField:
    """h, ∂₁h and ∂₁²h on the grid nodes, plus h at the s-midpoints.

    ``grad_t`` holds ∂_μh and ``lap_t`` holds Δ′h; both are needed by the general
    potential formula and vanish identically (respectively) for tubes.
    """

    grid: TensorGrid
    epsilon: float
    h: np.ndarray
    d1h: np.ndarray
    d11h: np.ndarray
    h_mid: np.ndarray
    grad_t: Tuple[np.ndarray, ...]
    lap_t: np.ndarray
    kappa1: np.ndarray

    @property
    def min_h(self) -> float:
        return float(min(self.h.min(), self.h_mid.min()))


def omega_radius(grid: TensorGrid) -> float:
    """a = sup_{t∈ω}|t| for the centred box described by the grid."""
    return 0.5 * float(np.sqrt(np.sum(np.square(grid.sides))))


def jacobian_field(
    curve: CurveSpec, rot: RotationPath, epsilon: float, grid: TensorGrid
) -> JacobianField:
    """Evaluate h and its s-derivatives from the closed-form expressions."""
    if grid.dim != curve.dim:
        raise AssemblyError(f"grid dimension {grid.dim} does not match curve dimension {curve.dim}")
    if abs(grid.length - curve.length) > 1e-12 * curve.length:
        raise AssemblyError("grid length does not match curve length")

    a = omega_radius(grid)
    validity = check_immersion(curve, a, epsilon)
    if not validity.passed:
        raise PreconditionError(
            f"epsilon={epsilon} >= (C_Gamma a)^-1 = {validity.threshold:.6g}; "
            "h may vanish in the tube"
        )

    s = grid.s_samples
    r = rot.at(s)
    k0 = frenet_stack(curve, s, 0)
    k1 = frenet_stack(curve, s, 1)
    k2 = frenet_stack(curve, s, 2)

    k_col = k0[:, 1:, 0]
    kd_col = k1[:, 1:, 0]
    kdd_col = k2[:, 1:, 0]
    kp = k0[:, 1:, 1:]
    kpd = k1[:, 1:, 1:]

    def mv(mat, vec):
        return np.einsum("nij,nj->ni", mat, vec)

    c0 = mv(r, k_col)
    c1 = mv(r, kd_col - mv(kp, k_col))
    c2 = mv(r, kdd_col - mv(kpd, k_col) - 2.0 * mv(kp, kd_col) + mv(kp, mv(kp, k_col)))

    def affine(coeff: np.ndarray) -> np.ndarray:
        out = np.zeros((coeff.shape[0],) + grid.t_shape)
        for mu, t_mu in enumerate(grid.t_mesh):
            out += coeff[:, mu].reshape((-1,) + (1,) * len(grid.t_shape)) * t_mu
        return epsilon * out

    h_samples = 1.0 + affine(c0)
    d1h = affine(c1)[1:-1]
    d11h = affine(c2)[1:-1]
    h = h_samples[1:-1]
    h_mid = 0.5 * (h_samples[:-1] + h_samples[1:])

    grad_t = tuple(
        np.broadcast_to(
            (epsilon * c0[1:-1, mu]).reshape((-1,) + (1,) * len(grid.t_shape)), grid.shape
        ).copy()
        for mu in range(curve.dim - 1)
    )

    if np.any(h <= 0) or np.any(h_mid <= 0):
        raise GeometryError("h is not positive on the grid")

    return JacobianField(
        grid=grid,
        epsilon=float(epsilon),
        h=h,
        d1h=d1h,
        d11h=d11h,
        h_mid=h_mid,
        grad_t=grad_t,
        lap_t=np.zeros(grid.shape),
        kappa1=curve.kappa1(grid.s_nodes),
    )


@dataclass(frozen=True)
class ThinTubeBounds:
    """Measured sup norms of 1−h², ∂₁h, ∂₁²h, ∂_μh next to their a-priori bounds."""

    one_minus_h2: float
    one_minus_h2_bound: float
    d1h: float
    d1h_bound: float
    d11h: float
    d11h_bound: float
    grad_t: float
    grad_t_bound: float

    @property
    def passed(self) -> bool:
        slack = 1e-12
        return (
            self.one_minus_h2 <= self.one_minus_h2_bound + slack
            and self.d1h <= self.d1h_bound + slack
            and self.d11h <= self.d11h_bound + slack
            and self.grad_t <= self.grad_t_bound + slack
        )


def thin_tube_bounds(curve: CurveSpec, jf: JacobianField, samples: int = 2001) -> ThinTubeBounds:
    """Compare the Jacobian field with the thin-tube estimates."""
    eps = jf.epsilon
    a = omega_radius(jf.grid)
    s = np.linspace(0.0, curve.length, samples)
    k_sup = float(np.max(np.abs(curve.kappa1(s))))
    kd1_sup = float(np.max(np.abs(curve.kappa1.derivative(s, 1))))
    kd2_sup = float(np.max(np.abs(curve.kappa1.derivative(s, 2))))
    frob = float(np.max(np.linalg.norm(frenet_stack(curve, s, 0), axis=(1, 2))))
    frob_dot = float(np.max(np.linalg.norm(frenet_stack(curve, s, 1), axis=(1, 2))))
    grad = max((float(np.max(np.abs(g))) for g in jf.grad_t), default=0.0)

    return ThinTubeBounds(
        one_minus_h2=float(np.max(np.abs(1.0 - jf.h**2))),
        one_minus_h2_bound=eps * a * k_sup * (2.0 + eps * a * k_sup),
        d1h=float(np.max(np.abs(jf.d1h))),
        d1h_bound=eps * a * (kd1_sup + frob**2),
        d11h=float(np.max(np.abs(jf.d11h))),
        d11h_bound=eps * a * (kd2_sup + 3.0 * frob_dot * frob + frob**3),
        grad_t=grad,
        # |∂_μh| = ε|κ₁||R_{μ2}| ≤ ε‖κ₁‖; the factor a is only an upper bound when a ≥ 1
        grad_t_bound=eps * max(a, 1.0) * k_sup,
    )
