"""Uniform B-spline grids and Cox-de Boor basis evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class SplineGrid:
    """Uniform knot vector of ``intervals + 2 * order + 1`` knots.

    ``order`` is the polynomial degree (3 = cubic). The interior domain
    ``[t_min, t_max]`` is split into ``intervals`` equal pieces and the knot
    vector is extended by ``order`` knots on either side, so every point of
    the interior domain is covered by a full set of ``intervals + order``
    basis functions.
    """

    order: int = 3
    intervals: int = 5
    t_min: float = -1.0
    t_max: float = 1.0

    def __post_init__(self):
        if self.order < 0 or self.intervals < 1:
            raise ValueError("spline order must be >= 0 and intervals >= 1")
        if not self.t_max > self.t_min:
            raise ValueError("spline domain must have t_max > t_min")

    @property
    def step(self) -> float:
        return (self.t_max - self.t_min) / self.intervals

    @property
    def n_basis(self) -> int:
        return self.intervals + self.order

    @cached_property
    def knots(self) -> np.ndarray:
        j = np.arange(-self.order, self.intervals + self.order + 1)
        return self.t_min + j * self.step


def basis_matrix(x: np.ndarray, grid: SplineGrid, with_derivative: bool = False):
    """Evaluate all basis functions at every entry of ``x``.

    Returns an array of shape ``x.shape + (n_basis,)``; with
    ``with_derivative`` also returns d/dx of each basis function. Degree-0
    pieces use half-open intervals ``[t_j, t_{j+1})``. Outside the extended
    knot span every basis value is zero, and between the interior domain and
    the outermost knots the values no longer sum to one.
    """
    t = grid.knots
    x = np.asarray(x, dtype=np.float64)[..., None]
    b = ((x >= t[:-1]) & (x < t[1:])).astype(np.float64)
    lower = b
    for k in range(1, grid.order + 1):
        lower = b
        left = (x - t[:-k - 1]) / (t[k:-1] - t[:-k - 1])
        right = (t[k + 1:] - x) / (t[k + 1:] - t[1:-k])
        b = left * lower[..., :-1] + right * lower[..., 1:]
    if not with_derivative:
        return b
    if grid.order == 0:
        return b, np.zeros_like(b)
    # uniform knots: d/dx B_{j,k} = (B_{j,k-1} - B_{j+1,k-1}) / step
    d = (lower[..., :-1] - lower[..., 1:]) / grid.step
    return b, d


def bspline_basis(x: float, grid: SplineGrid) -> np.ndarray:
    """All ``grid.n_basis`` basis values at a single point."""
    return basis_matrix(np.array([x]), grid)[0]
