"""Periodic structured grids and second-order finite-difference stencils.

Every field in this package is a plain ndarray whose leading axes run over
grid nodes (shape ``grid.shape``) and whose trailing axes, if any, carry
tensor indices.  The grid is a flat chart on a torus: index arithmetic wraps,
which keeps every stencil a composition of ``np.roll`` calls and makes all
operators exactly translation equivariant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on a d-torus, d in {1, 2}.

    Parameters
    ----------
    dim : spatial dimension (1 or 2).
    n_points : nodes per axis.
    lengths : period per axis, so the spacing is lengths[i] / n_points[i].
    """

    dim: int
    n_points: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.n_points) != self.dim or len(self.lengths) != self.dim:
            raise ValueError("n_points and lengths must have one entry per axis")
        if any(n < 8 for n in self.n_points):
            raise ValueError(f"need at least 8 nodes per axis, got {self.n_points}")
        if any(L <= 0 for L in self.lengths):
            raise ValueError(f"axis lengths must be positive, got {self.lengths}")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.n_points)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.n_points))

    @property
    def h_min(self) -> float:
        return min(self.h)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.n_points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def axes(self) -> list[np.ndarray]:
        """Node coordinates per axis (left edge at 0)."""
        return [np.arange(n) * h for n, h in zip(self.n_points, self.h)]

    def coords(self) -> list[np.ndarray]:
        """Coordinate arrays of shape ``grid.shape``, one per axis."""
        return list(np.meshgrid(*self.axes(), indexing="ij"))

    # ---- stencils -------------------------------------------------------
    # Fields may carry trailing tensor axes; spatial axes are always the
    # leading ones, so np.roll on axis < dim acts on nodes only.

    def d1(self, a: np.ndarray, axis: int) -> np.ndarray:
        """Centered first difference along a spatial axis, O(h^2)."""
        h = self.h[axis]
        return (np.roll(a, -1, axis=axis) - np.roll(a, 1, axis=axis)) / (2.0 * h)

    def d2(self, a: np.ndarray, axis: int) -> np.ndarray:
        """Centered second difference along a spatial axis, O(h^2)."""
        h = self.h[axis]
        return (np.roll(a, -1, axis=axis) - 2.0 * a + np.roll(a, 1, axis=axis)) / (h * h)

    def partial(self, a: np.ndarray) -> np.ndarray:
        """Stack all first partials: result[..., i] = d1(a, i) for node-shaped a."""
        return np.stack([self.d1(a, ax) for ax in range(self.dim)], axis=-1)

    def integrate(self, a: np.ndarray, weight: np.ndarray | None = None) -> float:
        """Riemann sum over nodes; optional nodewise weight (e.g. sqrt(det g))."""
        if weight is None:
            return float(np.sum(a) * self.cell_volume)
        return float(np.sum(a * weight) * self.cell_volume)

    def wrap_delta(self, i: np.ndarray | int, j: np.ndarray | int, axis: int):
        """Shortest periodic displacement j - i in cells along one axis."""
        n = self.n_points[axis]
        d = (np.asarray(j) - np.asarray(i)) % n
        return np.where(d > n // 2, d - n, d)
