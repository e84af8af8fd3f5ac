"""Curvature functions of the reference curve.

Every curvature is a scalar function on [0, L] that can be evaluated together with its
first and second derivative. Presets carry closed-form derivatives; sampled data is
turned into a cubic spline.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Union

import numpy as np
from scipy.interpolate import CubicSpline

from core.exceptions import CapabilityError, CurveError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class CurvatureFunction:
    """A curvature κ(s) with derivatives κ̇ and κ̈."""

    kind: str
    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    params: Dict[str, Any] = field(default_factory=dict)

    def __call__(self, s: ArrayLike) -> np.ndarray:
        return self.value(np.asarray(s, dtype=float))

    def derivative(self, s: ArrayLike, order: int = 1) -> np.ndarray:
        """Evaluate the derivative of the given order (0, 1 or 2)."""
        s = np.asarray(s, dtype=float)
        if order == 0:
            return self.value(s)
        if order == 1:
            return self.d1(s)
        if order == 2:
            return self.d2(s)
        raise CapabilityError(f"curvature derivatives of order {order} are not available")

    def norm(self, length: float, order: int, samples: int = 2001) -> float:
        """Sampled C^k norm: sum of sup norms of the derivatives up to ``order``."""
        s = np.linspace(0.0, length, samples)
        return float(sum(np.max(np.abs(self.derivative(s, k))) for k in range(order + 1)))


def constant(value: float = 0.0) -> CurvatureFunction:
    value = float(value)
    return CurvatureFunction(
        kind="constant",
        value=lambda s: np.full_like(s, value, dtype=float),
        d1=lambda s: np.zeros_like(s, dtype=float),
        d2=lambda s: np.zeros_like(s, dtype=float),
        params={"value": value},
    )


def sine(
    amplitude: float = 1.0,
    frequency: float = 1.0,
    phase: float = 0.0,
    offset: float = 0.0,
) -> CurvatureFunction:
    """κ(s) = offset + amplitude·sin(frequency·s + phase)."""
    a, w, p, c = float(amplitude), float(frequency), float(phase), float(offset)
    return CurvatureFunction(
        kind="sine",
        value=lambda s: c + a * np.sin(w * s + p),
        d1=lambda s: a * w * np.cos(w * s + p),
        d2=lambda s: -a * w * w * np.sin(w * s + p),
        params={"amplitude": a, "frequency": w, "phase": p, "offset": c},
    )


def bump(amplitude: float = 1.0, center: float = 0.5, width: float = 0.25) -> CurvatureFunction:
    """Compactly supported C∞ bump amplitude·exp(1 − 1/(1 − x²)), x = (s − center)/width."""
    a, c, w = float(amplitude), float(center), float(width)
    if w <= 0:
        raise CurveError(f"bump width must be positive, got {w}")

    def _parts(s: np.ndarray):
        x = (np.asarray(s, dtype=float) - c) / w
        inside = np.abs(x) < 1.0
        # exp(1 - 1/u) underflows to 0 long before u reaches 1e-3
        u = np.where(inside, np.maximum(1.0 - x * x, 1e-3), 1.0)
        g = np.where(inside, np.exp(1.0 - 1.0 / u), 0.0)
        q = -2.0 * x / (u * u)
        dq = -2.0 / (u * u) - 8.0 * x * x / u**3
        return g, q, dq

    def value(s):
        g, _, _ = _parts(s)
        return a * g

    def d1(s):
        g, q, _ = _parts(s)
        return a * g * q / w

    def d2(s):
        g, q, dq = _parts(s)
        return a * g * (q * q + dq) / (w * w)

    return CurvatureFunction(
        kind="bump",
        value=value,
        d1=d1,
        d2=d2,
        params={"amplitude": a, "center": c, "width": w},
    )


def sampled(s_samples: np.ndarray, values: np.ndarray) -> CurvatureFunction:
    """Cubic-spline curvature through tabulated samples."""
    s_samples = np.asarray(s_samples, dtype=float)
    values = np.asarray(values, dtype=float)
    if s_samples.ndim != 1 or s_samples.shape != values.shape or s_samples.size < 4:
        raise CurveError("sampled curvature needs at least 4 matching (s, kappa) samples")
    if np.any(np.diff(s_samples) <= 0):
        raise CurveError("sampled curvature abscissae must be strictly increasing")

    spline = CubicSpline(s_samples, values)
    d1 = spline.derivative(1)
    d2 = spline.derivative(2)
    return CurvatureFunction(
        kind="sampled",
        value=lambda s: spline(s),
        d1=lambda s: d1(s),
        d2=lambda s: d2(s),
        params={"nodes": int(s_samples.size)},
    )


def load_sampled_csv(path: Union[str, Path]) -> List[CurvatureFunction]:
    """Read columns (s, κ₁, κ₂, …) and return one spline per curvature column."""
    path = Path(path).expanduser()
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[1] < 2:
        raise CurveError(f"{path}: expected columns s, kappa1[, kappa2, ...]")
    logger.info(f"Loaded {data.shape[0]} curvature samples from {path}")
    return [sampled(data[:, 0], data[:, j]) for j in range(1, data.shape[1])]


PRESETS: Dict[str, Callable[..., CurvatureFunction]] = {
    "constant": constant,
    "sine": sine,
    "bump": bump,
}


def from_preset(kind: str, **params: Any) -> CurvatureFunction:
    """Build a curvature function from a preset name and its parameters."""
    try:
        factory = PRESETS[kind]
    except KeyError:
        raise CapabilityError(
            f"unknown curvature preset '{kind}' (available: {', '.join(sorted(PRESETS))})"
        ) from None
    return factory(**params)
