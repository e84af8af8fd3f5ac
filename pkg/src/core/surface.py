"""Strips about a curve on a two-dimensional Riemannian surface.

In Fermi coordinates the metric is diag(h², ε²) with h solving the Jacobi equation
∂_t²h + ε²K h = 0, h(s, 0) = 1, ∂_t h(s, 0) = −εκ(s). The s-derivatives of h solve the
differentiated equations and are marched together with h, so no numerical differencing
in s is needed unless ``derivative_method="spline"`` is requested.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Tuple, Union

import numpy as np
from scipy.interpolate import CubicSpline

from core.cross_section import CrossSection
from core.curvature import CurvatureFunction
from core.exceptions import (
    ArgumentError,
    AssemblyError,
    CapabilityError,
    CurveError,
    FocalPointError,
)
from core.geometry import JacobianField
from core.grid import TensorGrid
from core.operators import DiscreteOperator, PotentialField, assemble_T, general_potential

logger = logging.getLogger(__name__)

DERIVATIVE_METHODS = ("variational", "spline")

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GaussCurvature:
    """K(s, t) with its first two s-derivatives."""

    kind: str
    value: Field
    d_s: Field
    d_ss: Field
    params: Dict[str, Any] = field(default_factory=dict)

    def __call__(self, s, t) -> np.ndarray:
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        return np.asarray(self.value(s, t), dtype=float)


def _zeros(s, t):
    return np.zeros(np.broadcast(s, t).shape)


def gauss_constant(value: float = 0.0) -> GaussCurvature:
    k = float(value)
    return GaussCurvature(
        "constant", lambda s, t: np.full(np.broadcast(s, t).shape, k), _zeros, _zeros, {"value": k}
    )


def gauss_cos(amplitude: float = 1.0, frequency: float = 1.0) -> GaussCurvature:
    """K = A cos(ωs)."""
    a, w = float(amplitude), float(frequency)
    return GaussCurvature(
        "cos",
        lambda s, t: a * np.cos(w * s) + 0.0 * t,
        lambda s, t: -a * w * np.sin(w * s) + 0.0 * t,
        lambda s, t: -a * w * w * np.cos(w * s) + 0.0 * t,
        {"amplitude": a, "frequency": w},
    )


def gauss_product(
    amplitude: float = 1.0, frequency: float = 1.0, beta: float = 0.0
) -> GaussCurvature:
    """K = A cos(ωs)(1 + βt)."""
    a, w, b = float(amplitude), float(frequency), float(beta)
    return GaussCurvature(
        "product",
        lambda s, t: a * np.cos(w * s) * (1.0 + b * t),
        lambda s, t: -a * w * np.sin(w * s) * (1.0 + b * t),
        lambda s, t: -a * w * w * np.cos(w * s) * (1.0 + b * t),
        {"amplitude": a, "frequency": w, "beta": b},
    )


GAUSS_PRESETS: Dict[str, Callable[..., GaussCurvature]] = {
    "constant": gauss_constant,
    "cos": gauss_cos,
    "product": gauss_product,
}


def gauss_from_preset(kind: str, **params: Any) -> GaussCurvature:
    try:
        factory = GAUSS_PRESETS[kind]
    except KeyError:
        raise CapabilityError(
            f"unknown Gauss curvature preset '{kind}' "
            f"(available: {', '.join(sorted(GAUSS_PRESETS))})"
        ) from None
    return factory(**params)


@dataclass(frozen=True)
class SurfaceStripSpec:
    """Strip of half-width ε about a curve with geodesic curvature κ, ω = (−1, 1)."""

    length: float
    kappa: CurvatureFunction
    gauss: GaussCurvature
    epsilon: float = 0.1
    derivative_method: str = "variational"

    def __post_init__(self):
        if self.length <= 0:
            raise CurveError(f"strip length must be positive, got {self.length}")
        if self.epsilon <= 0:
            raise ArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if self.derivative_method not in DERIVATIVE_METHODS:
            raise ArgumentError(
                f"derivative_method must be one of {DERIVATIVE_METHODS}, "
                f"got '{self.derivative_method}'"
            )
        s = np.linspace(0.0, self.length, 401)
        t = np.linspace(-1.0, 1.0, 41)
        ss, tt = np.meshgrid(s, t, indexing="ij")
        if not np.isfinite(self.kappa.norm(self.length, 2)):
            raise CurveError("geodesic curvature has unbounded C^2 norm on the sample grid")
        if not np.all(np.isfinite(self.gauss(ss, tt))):
            raise CurveError("Gauss curvature is not finite on the strip")

    @property
    def omega(self) -> CrossSection:
        return CrossSection.interval(1.0)

    @property
    def dim(self) -> int:
        return 2

    def with_epsilon(self, epsilon: float) -> "SurfaceStripSpec":
        return replace(self, epsilon=float(epsilon))

    @property
    def gauss_sup(self) -> float:
        s = np.linspace(0.0, self.length, 401)
        t = np.linspace(-1.0, 1.0, 41)
        ss, tt = np.meshgrid(s, t, indexing="ij")
        return float(np.max(np.abs(self.gauss(ss, tt))))


def _march(spec: SurfaceStripSpec, s: np.ndarray, steps: int, step: float) -> np.ndarray:
    """RK4 for (h, g, q) and their t-derivatives from t = 0; returns shape (steps+1, 6, len(s))."""
    eps2 = spec.epsilon**2
    gauss = spec.gauss

    def rhs(t, y):
        k = gauss.value(s, t)
        ks = gauss.d_s(s, t)
        kss = gauss.d_ss(s, t)
        h, g, q = y[0], y[2], y[4]
        return np.stack(
            [
                y[1],
                -eps2 * k * h,
                y[3],
                -eps2 * (ks * h + k * g),
                y[5],
                -eps2 * (kss * h + 2.0 * ks * g + k * q),
            ]
        )

    eps = spec.epsilon
    y = np.stack(
        [
            np.ones_like(s),
            -eps * spec.kappa(s),
            np.zeros_like(s),
            -eps * spec.kappa.derivative(s, 1),
            np.zeros_like(s),
            -eps * spec.kappa.derivative(s, 2),
        ]
    )
    out = np.empty((steps + 1,) + y.shape)
    out[0] = y
    t = 0.0
    for k in range(steps):
        a1 = rhs(t, y)
        a2 = rhs(t + 0.5 * step, y + 0.5 * step * a1)
        a3 = rhs(t + 0.5 * step, y + 0.5 * step * a2)
        a4 = rhs(t + step, y + step * a3)
        y = y + (step / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        t += step
        out[k + 1] = y
    return out


def solve_jacobi_h(spec: SurfaceStripSpec, grid: TensorGrid) -> JacobianField:
    """Jacobian field of the strip from the Jacobi equation (RK4 in t, step Δt/2)."""
    if grid.dim != 2 or not np.isclose(grid.sides[0], 2.0):
        raise AssemblyError("surface strips use a planar grid over (0, L) x (-1, 1)")
    if abs(grid.length - spec.length) > 1e-12 * spec.length:
        raise AssemblyError("grid length does not match strip length")

    half = 0.5 * grid.dt[0]
    t_nodes = grid.t_axes[0]
    steps_to_node = np.rint(np.abs(t_nodes) / half).astype(int)
    reach = int(steps_to_node.max())

    s = grid.s_samples
    forward = _march(spec, s, reach, half)
    backward = _march(spec, s, reach, -half)

    states = np.where(
        (t_nodes >= 0)[:, None, None], forward[steps_to_node], backward[steps_to_node]
    )
    # states: (m_t, 6, m_s + 2) -> (m_s + 2, m_t) per component
    h_all = states[:, 0].T
    if np.any(h_all <= 0):
        bad = np.unravel_index(np.argmin(h_all), h_all.shape)
        raise FocalPointError(
            f"Jacobi solution reaches {h_all[bad]:.3g} at s={s[bad[0]]:.6g}, "
            f"t={t_nodes[bad[1]]:.6g}; the strip is too wide for this surface"
        )

    if spec.derivative_method == "variational":
        d1h = states[:, 2].T[1:-1]
        d11h = states[:, 4].T[1:-1]
    else:
        spline = CubicSpline(s, h_all, axis=0)
        d1h = spline.derivative(1)(grid.s_nodes)
        d11h = spline.derivative(2)(grid.s_nodes)

    h = h_all[1:-1]
    dth = states[:, 1].T[1:-1]
    k_nodes = spec.gauss(grid.s_nodes[:, None], t_nodes[None, :])
    logger.debug(f"Jacobi field on {grid.describe()}: min h = {h_all.min():.6f}")

    return JacobianField(
        grid=grid,
        epsilon=float(spec.epsilon),
        h=h,
        d1h=d1h,
        d11h=d11h,
        h_mid=0.5 * (h_all[:-1] + h_all[1:]),
        grad_t=(dth,),
        lap_t=-(spec.epsilon**2) * k_nodes * h,
        kappa1=spec.kappa(grid.s_nodes),
    )


def surface_effective_potential(
    spec: SurfaceStripSpec, s_grid: Union[TensorGrid, np.ndarray]
) -> PotentialField:
    """v₀ = −κ²/4 − K(s, 0)/2 on the s-nodes."""
    s = s_grid.s_nodes if isinstance(s_grid, TensorGrid) else np.asarray(s_grid, dtype=float)
    return PotentialField(v0=-0.25 * spec.kappa(s) ** 2 - 0.5 * spec.gauss(s, np.zeros_like(s)))


def strip_geometry(
    spec: SurfaceStripSpec, grid: TensorGrid
) -> Tuple[JacobianField, PotentialField]:
    """Jacobian field and full potential of the strip on ``grid``."""
    jf = solve_jacobi_h(spec, grid)
    return jf, general_potential(jf, surface_effective_potential(spec, grid).v0)


def assemble_surface_T(
    spec: SurfaceStripSpec, grid: TensorGrid, e1_shift: str = "analytic"
) -> DiscreteOperator:
    """H − ε⁻²E₁ for the strip, with a_ε = h⁻² and the general potential."""
    jf, potential = strip_geometry(spec, grid)
    return assemble_T(jf, potential, spec.omega, spec.epsilon, grid, e1_shift)
