"""Tensor grid over the straight tube Ω = I × ω."""

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple, Union

import numpy as np

from core.exceptions import ArgumentError


@dataclass(frozen=True)
class TensorGrid:
    """Uniform interior nodes of (0, L) × Π(−b_μ/2, b_μ/2).

    Boundary nodes are omitted, which imposes the Dirichlet condition. Fields on the
    grid are arrays of shape ``(m_s, m_2, ..., m_d)``; the flat (lexicographic) index
    runs with s slowest.
    """

    length: float
    s_count: int
    t_counts: Tuple[int, ...]
    sides: Tuple[float, ...]

    def __post_init__(self):
        if self.length <= 0:
            raise ArgumentError(f"length must be positive, got {self.length}")
        if self.s_count < 1 or any(m < 1 for m in self.t_counts):
            raise ArgumentError("grid needs at least one interior node per direction")
        if len(self.t_counts) != len(self.sides):
            raise ArgumentError("one transverse node count is needed per cross-section side")

    @classmethod
    def build(
        cls,
        length: float,
        s_count: int,
        sides: Sequence[float],
        t_counts: Union[int, Sequence[int]],
    ) -> "TensorGrid":
        sides = tuple(float(b) for b in sides)
        if isinstance(t_counts, (int, np.integer)):
            t_counts = (int(t_counts),) * len(sides)
        return cls(float(length), int(s_count), tuple(int(m) for m in t_counts), sides)

    @property
    def dim(self) -> int:
        return 1 + len(self.t_counts)

    @property
    def ds(self) -> float:
        return self.length / (self.s_count + 1)

    @property
    def dt(self) -> Tuple[float, ...]:
        return tuple(b / (m + 1) for b, m in zip(self.sides, self.t_counts))

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.s_count,) + self.t_counts

    @property
    def t_shape(self) -> Tuple[int, ...]:
        return self.t_counts

    @property
    def n_t(self) -> int:
        return int(np.prod(self.t_counts))

    @property
    def size(self) -> int:
        return self.s_count * self.n_t

    @property
    def cell_volume(self) -> float:
        return self.ds * float(np.prod(self.dt))

    @cached_property
    def s_nodes(self) -> np.ndarray:
        return self.ds * np.arange(1, self.s_count + 1)

    @cached_property
    def s_samples(self) -> np.ndarray:
        """Interior nodes together with the endpoints 0 and L."""
        return self.ds * np.arange(0, self.s_count + 2)

    @cached_property
    def t_axes(self) -> Tuple[np.ndarray, ...]:
        return tuple(
            -0.5 * b + h * np.arange(1, m + 1)
            for b, h, m in zip(self.sides, self.dt, self.t_counts)
        )

    @cached_property
    def t_mesh(self) -> Tuple[np.ndarray, ...]:
        """Transverse coordinates broadcast to ``t_shape``."""
        return tuple(np.meshgrid(*self.t_axes, indexing="ij"))

    def longitudinal(self) -> "TensorGrid":
        """The s-grid alone, as used by the one-dimensional operator."""
        return TensorGrid(self.length, self.s_count, (), ())

    def index(self, i: int, *j: int) -> int:
        """Lexicographic index of node (s_i, t_j)."""
        return int(np.ravel_multi_index((i,) + tuple(j), self.shape))

    def unravel(self, k: int) -> Tuple[int, ...]:
        return tuple(int(v) for v in np.unravel_index(k, self.shape))

    def to_field(self, vector: np.ndarray) -> np.ndarray:
        return np.asarray(vector).reshape(self.shape)

    def describe(self) -> str:
        return "x".join(str(m) for m in self.shape)
