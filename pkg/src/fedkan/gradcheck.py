"""Analytic-vs-finite-difference gradient comparison for a whole model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import Architecture, build_model, encode_targets, init_model
from .numeric import finite_diff_grad, loss


@dataclass
class GradCheckReport:
    arch: Architecture
    n_params: int
    n_checked: int
    max_rel_error: float
    worst_param: str
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


def gradient_check(arch: Architecture, seed: int = 0, batch: int = 16, h: float = 1e-5,
                   tolerance: float = 1e-4, min_fd: float = 1e-7) -> GradCheckReport:
    """Compare backprop against central differences on a random batch.

    Only parameters whose finite-difference gradient exceeds ``min_fd`` in
    magnitude are scored; relative error is ``|a - f| / max(|a|, |f|)``.
    """
    rng = np.random.default_rng(seed)
    model = init_model(arch, seed)
    x = rng.normal(size=(batch, arch.widths[0]))
    n_classes = max(arch.widths[-1], 2)
    targets = encode_targets(rng.integers(0, n_classes, size=batch), arch.widths[-1])

    probs, cache = model.forward(x)
    analytic = model.backward(cache, probs, targets).flat()

    def objective(params):
        return loss(build_model(arch, params).forward(x)[0], targets, arch.task)

    numeric = finite_diff_grad(objective, model.params, h).flat()
    names = np.repeat(model.params.names, [a.size for _, a in model.params])
    mask = np.abs(numeric) > min_fd
    rel = np.zeros_like(numeric)
    denom = np.maximum(np.abs(analytic), np.abs(numeric))
    rel[mask] = np.abs(analytic - numeric)[mask] / denom[mask]
    worst = int(np.argmax(rel))
    return GradCheckReport(arch, numeric.size, int(mask.sum()), float(rel[worst]),
                           str(names[worst]), tolerance)
