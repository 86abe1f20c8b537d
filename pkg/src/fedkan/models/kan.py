"""Kolmogorov-Arnold layers with spline-parameterized edge functions.

Every edge (i -> j) carries its own univariate function

    phi_ji(t) = base_weight[j, i] * silu(t) + sum_b spline_coeffs[j, i, b] * B_b(t)

and node j sums its incoming edges. There are no bias terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numeric import ShapeError, as_matrix, silu, silu_grad
from .splines import SplineGrid, basis_matrix


@dataclass
class KanLayer:
    base_weight: np.ndarray  # (out_dim, in_dim)
    spline_coeffs: np.ndarray  # (out_dim, in_dim, n_basis)
    grid: SplineGrid

    def __post_init__(self):
        out_dim, in_dim = self.base_weight.shape
        if self.spline_coeffs.shape != (out_dim, in_dim, self.grid.n_basis):
            raise ShapeError(
                f"spline coefficients {self.spline_coeffs.shape} do not match "
                f"({out_dim}, {in_dim}, {self.grid.n_basis})"
            )

    @property
    def in_dim(self) -> int:
        return self.base_weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.base_weight.shape[0]


@dataclass
class KanLayerCache:
    inputs: np.ndarray
    silu_inputs: np.ndarray
    basis: np.ndarray  # (n, in_dim * n_basis)
    basis_deriv: np.ndarray | None


def kan_layer_forward(layer: KanLayer, x: np.ndarray, need_input_grad: bool = True):
    x = as_matrix(x)
    if x.shape[1] != layer.in_dim:
        raise ShapeError(f"layer expects {layer.in_dim} inputs, got {x.shape[1]}")
    n = x.shape[0]
    s = silu(x)
    if need_input_grad:
        b, db = basis_matrix(x, layer.grid, with_derivative=True)
    else:
        b, db = basis_matrix(x, layer.grid), None
    b = b.reshape(n, -1)
    coeffs = layer.spline_coeffs.reshape(layer.out_dim, -1)
    y = s @ layer.base_weight.T + b @ coeffs.T
    return y, KanLayerCache(x, s, b, db)


def kan_layer_backward(layer: KanLayer, cache: KanLayerCache, grad_out: np.ndarray):
    """Returns (d base_weight, d spline_coeffs, d inputs or None)."""
    d_base = grad_out.T @ cache.silu_inputs
    d_coeffs = (grad_out.T @ cache.basis).reshape(layer.spline_coeffs.shape)
    if cache.basis_deriv is None:
        return d_base, d_coeffs, None
    n = grad_out.shape[0]
    coeffs = layer.spline_coeffs.reshape(layer.out_dim, -1)
    through_spline = (grad_out @ coeffs).reshape(n, layer.in_dim, -1)
    d_in = (grad_out @ layer.base_weight) * silu_grad(cache.inputs)
    d_in = d_in + (through_spline * cache.basis_deriv).sum(axis=-1)
    return d_base, d_coeffs, d_in
