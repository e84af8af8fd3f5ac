"""Nodal sets: Sturm zeros of φ_n, sign agreement and nodal lines of ψ_n."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from skimage import measure

from core.exceptions import CapabilityError, SturmViolationError
from core.grid import TensorGrid

logger = logging.getLogger(__name__)


def _crossings(values: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Zero crossings along a line: exact node zeros plus interpolated sign changes."""
    values = np.asarray(values, dtype=float)
    zeros = list(s[values == 0.0])
    left, right = values[:-1], values[1:]
    idx = np.flatnonzero(left * right < 0.0)
    if idx.size:
        frac = left[idx] / (left[idx] - right[idx])
        zeros.extend(s[idx] + frac * (s[idx + 1] - s[idx]))
    return np.sort(np.asarray(zeros, dtype=float))


@dataclass(frozen=True, eq=False)
class NodalData1D:
    """Interior zeros of φ_n with the endpoints 0 and L adjoined in ``points``."""

    index: int
    zeros: np.ndarray
    length: float

    @property
    def points(self) -> np.ndarray:
        return np.concatenate([[0.0], self.zeros, [self.length]])

    @property
    def subintervals(self) -> List[Tuple[float, float]]:
        p = self.points
        return list(zip(p[:-1], p[1:]))

    @property
    def min_gap(self) -> float:
        return float(np.min(np.diff(self.points)))

    def distance(self, s: np.ndarray) -> np.ndarray:
        """dist(s, 𝒩(φ_n)); +inf when φ_n has no interior zeros."""
        s = np.asarray(s, dtype=float)
        if self.zeros.size == 0:
            return np.full(s.shape, np.inf)
        return np.min(np.abs(s[..., None] - self.zeros), axis=-1)

    def distance_to_cell_boundary(self, s: np.ndarray) -> np.ndarray:
        """dist(s, ∂I_n^k) for the subinterval containing s."""
        s = np.asarray(s, dtype=float)
        return np.min(np.abs(s[..., None] - self.points), axis=-1)


def nodal_points_1d(
    phi: np.ndarray,
    s_grid: Union[TensorGrid, np.ndarray],
    index: int,
    length: Optional[float] = None,
) -> NodalData1D:
    """Locate the n − 1 interior zeros of φ_n by sign changes and linear interpolation."""
    if isinstance(s_grid, TensorGrid):
        s, length = s_grid.s_nodes, s_grid.length
    else:
        s = np.asarray(s_grid, dtype=float)
        if length is None:
            length = float(s[-1] + s[0])
    zeros = _crossings(np.asarray(phi).ravel(), s)
    if zeros.size != index - 1:
        raise SturmViolationError(index, int(zeros.size))
    return NodalData1D(index=index, zeros=zeros, length=float(length))


@dataclass(frozen=True)
class ViolationReport:
    """Sign disagreements of ψ_n with φ_n away from 𝒩(φ_n)."""

    count: int
    tested: int
    margin: float
    empirical_margin: float


def sign_agreement(
    psi: np.ndarray, phi: np.ndarray, nodal: NodalData1D, margin: float, grid: TensorGrid
) -> ViolationReport:
    """Count nodes with dist(s, 𝒩(φ_n)) > margin where sgn ψ_n ≠ sgn φ_n.

    ``empirical_margin`` is the smallest margin for which the count is zero.
    """
    field_ = grid.to_field(psi)
    dist = nodal.distance(grid.s_nodes)
    expand = (slice(None),) + (None,) * len(grid.t_shape)
    mismatch = np.sign(field_) != np.sign(np.asarray(phi).ravel())[expand]
    dist_full = np.broadcast_to(dist[expand], grid.shape)

    tested = dist_full > margin
    count = int(np.count_nonzero(mismatch & tested))
    empirical = float(np.max(dist_full[mismatch])) if np.any(mismatch) else 0.0
    return ViolationReport(count, int(np.count_nonzero(tested)), float(margin), empirical)


@dataclass(frozen=True, eq=False)
class NodalDisplacement:
    """max over s-line crossings of dist(s, 𝒩(φ_n)), with lines of the wrong count set aside."""

    value: float
    flagged_lines: List[Tuple[int, ...]] = field(default_factory=list)
    crossings: List[Tuple[float, Tuple[float, ...]]] = field(default_factory=list)


def nodal_displacement(psi: np.ndarray, nodal: NodalData1D, grid: TensorGrid) -> NodalDisplacement:
    field_ = grid.to_field(psi)
    s = grid.s_nodes
    expected = nodal.index - 1
    worst = 0.0
    flagged: List[Tuple[int, ...]] = []
    crossings: List[Tuple[float, Tuple[float, ...]]] = []

    for j in np.ndindex(*grid.t_shape):
        line = field_[(slice(None),) + j]
        found = _crossings(line, s)
        t = tuple(float(axis[k]) for axis, k in zip(grid.t_axes, j))
        crossings.extend((float(c), t) for c in found)
        if found.size != expected:
            flagged.append(tuple(int(k) for k in j))
            continue
        if found.size:
            worst = max(worst, float(np.max(nodal.distance(found))))

    if flagged:
        logger.warning(
            f"nodal displacement n={nodal.index}: {len(flagged)} t-lines with a crossing count "
            f"other than {expected}"
        )
    return NodalDisplacement(worst, flagged, crossings)


def count_sign_domains(psi: np.ndarray, grid: TensorGrid) -> int:
    """Connected components of {ψ > 0} and {ψ < 0} on the grid graph."""
    field_ = grid.to_field(psi)
    _, positive = measure.label(field_ > 0, connectivity=1, return_num=True)
    _, negative = measure.label(field_ < 0, connectivity=1, return_num=True)
    return int(positive + negative)


@dataclass(frozen=True, eq=False)
class NodalPolyline:
    """Zero level set of a planar ψ_n in (s, t) coordinates."""

    paths: List[np.ndarray]
    terminations: int


def nodal_polyline(psi: np.ndarray, grid: TensorGrid) -> NodalPolyline:
    """Trace the nodal lines of ψ_n for d = 2 and count their ends on the node-grid boundary."""
    field_ = grid.to_field(psi)
    if field_.ndim != 2:
        raise CapabilityError("nodal polylines are traced for planar tubes only")
    rows, cols = field_.shape
    paths = []
    ends = 0
    for contour in measure.find_contours(field_, 0.0):
        if not np.allclose(contour[0], contour[-1]):
            for r, c in (contour[0], contour[-1]):
                if r <= 0 or r >= rows - 1 or c <= 0 or c >= cols - 1:
                    ends += 1
        s = grid.ds * (1.0 + contour[:, 0])
        t = grid.t_axes[0][0] + grid.dt[0] * contour[:, 1]
        paths.append(np.column_stack([s, t]))
    return NodalPolyline(paths, ends)
