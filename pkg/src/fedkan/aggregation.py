"""Server-side aggregation strategies.

Every strategy works on the flattened client parameter vectors stacked into
a ``(clients, parameters)`` matrix, so each scalar parameter is treated the
same way regardless of the tensor it belongs to.

Sums over clients are taken in sorted order per coordinate. That makes the
mean-based strategies bit-exactly invariant to client order and makes a
zero-trim trimmed mean bit-identical to the unweighted average.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, fields

import numpy as np

from .numeric import ParamSet, ShapeError

STRATEGIES = ("average", "median", "trimmed_mean", "momentum", "nesterov", "krum", "fedprox")
HYPERPARAMETERS = ("trim_fraction", "momentum_mu", "krum_f", "fedprox_mu", "sample_weighted")


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = "average"
    trim_fraction: float = 0.2
    momentum_mu: float = 0.9
    krum_f: int | None = None
    fedprox_mu: float = 0.01
    sample_weighted: bool = True

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}; valid strategies: {', '.join(STRATEGIES)}")
        if not 0.0 <= self.trim_fraction < 0.5:
            raise ValueError("trim_fraction must lie in [0, 0.5)")
        if not 0.0 <= self.momentum_mu < 1.0:
            raise ValueError("momentum_mu must lie in [0, 1)")
        if self.krum_f is not None and self.krum_f < 0:
            raise ValueError("krum_f must be >= 0")
        if self.fedprox_mu < 0:
            raise ValueError("fedprox_mu must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> StrategyConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown strategy keys {unknown}; allowed: {sorted(known)}")
        return cls(**d)

    @property
    def label(self) -> str:
        return self.kind

    def krum_f_for(self, k: int) -> int:
        return self.krum_f if self.krum_f is not None else max((k - 3) // 2, 0)


@dataclass
class ServerMomentumState:
    velocity: ParamSet | None = field(default=None)

    def velocity_for(self, template: ParamSet) -> np.ndarray:
        if self.velocity is None:
            return np.zeros(template.size)
        template.check_congruent(self.velocity)
        return self.velocity.flat()


def stack(clients: Sequence[ParamSet]) -> np.ndarray:
    if not clients:
        raise ValueError("no client parameters to aggregate")
    first = clients[0]
    for other in clients[1:]:
        first.check_congruent(other)
    return np.stack([c.flat() for c in clients])


def _sorted_sum(rows: np.ndarray) -> np.ndarray:
    rows = np.sort(rows, axis=0)
    acc = rows[0].copy()
    for r in rows[1:]:
        acc += r
    return acc


def aggregate_average(clients: Sequence[ParamSet], counts: Sequence[int] | None = None,
                      weighted: bool = True) -> ParamSet:
    """Coordinate-wise mean, weighted by sample counts when ``weighted``."""
    x = stack(clients)
    if weighted and counts is not None:
        if len(counts) != len(clients):
            raise ValueError("one sample count per client is required")
        n = np.asarray(counts, dtype=np.float64)
        if np.any(n <= 0):
            raise ValueError("sample counts must be positive")
        return clients[0].with_flat(_sorted_sum((n / n.sum())[:, None] * x))
    return clients[0].with_flat(_sorted_sum(x) / x.shape[0])


def aggregate_median(clients: Sequence[ParamSet]) -> ParamSet:
    """Coordinate-wise median; even counts take the midpoint of the middle pair."""
    x = np.sort(stack(clients), axis=0)
    k = x.shape[0]
    if k % 2:
        med = x[k // 2]
    else:
        med = (x[k // 2 - 1] + x[k // 2]) / 2.0
    return clients[0].with_flat(med)


def trim_count(beta: float, k: int) -> int:
    return math.floor(beta * k + 1e-9)


def aggregate_trimmed_mean(clients: Sequence[ParamSet], beta: float = 0.2) -> ParamSet:
    """Drop the ``floor(beta*K)`` lowest and highest values per coordinate, average the rest."""
    x = stack(clients)
    k = x.shape[0]
    t = trim_count(beta, k)
    if 2 * t >= k:
        raise ValueError(f"trim of {t} per side leaves nothing from {k} clients")
    kept = np.sort(x, axis=0)[t:k - t]
    return clients[0].with_flat(_sorted_sum(kept) / kept.shape[0])


def aggregate_momentum(clients: Sequence[ParamSet], global_params: ParamSet,
                       state: ServerMomentumState, mu: float = 0.9,
                       counts: Sequence[int] | None = None, weighted: bool = True):
    """Server momentum on the pseudo-gradient ``average - global``.

    ``v <- mu*v + delta`` and the new global is ``global + v``, computed as
    ``average + mu*v_old`` so a zero velocity reproduces the average exactly.
    """
    avg = aggregate_average(clients, counts, weighted)
    global_params.check_congruent(avg)
    v_old = state.velocity_for(global_params)
    a = avg.flat()
    v_new = mu * v_old + (a - global_params.flat())
    return avg.with_flat(a + mu * v_old), ServerMomentumState(avg.with_flat(v_new))


def aggregate_nesterov(clients: Sequence[ParamSet], global_params: ParamSet,
                       state: ServerMomentumState, mu: float = 0.9,
                       counts: Sequence[int] | None = None, weighted: bool = True):
    """Lookahead momentum: new global is ``global + mu*v_new + delta`` (= ``average + mu*v_new``)."""
    avg = aggregate_average(clients, counts, weighted)
    global_params.check_congruent(avg)
    v_old = state.velocity_for(global_params)
    a = avg.flat()
    v_new = mu * v_old + (a - global_params.flat())
    return avg.with_flat(a + mu * v_new), ServerMomentumState(avg.with_flat(v_new))


def krum_scores(x: np.ndarray, f: int) -> np.ndarray:
    k = x.shape[0]
    m = k - f - 2
    if m < 1:
        raise ValueError(f"Krum with f={f} needs at least {f + 3} clients, got {k}")
    d = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            d[i, j] = d[j, i] = np.sum((x[i] - x[j]) ** 2)
    scores = np.empty(k)
    for i in range(k):
        others = np.sort(np.delete(d[i], i))
        scores[i] = np.sum(others[:m])
    return scores


def krum_select(clients: Sequence[ParamSet], f: int) -> tuple[int, ParamSet]:
    """Index and parameters of the client closest to its ``K-f-2`` nearest peers.

    Ties go to the lowest index.
    """
    scores = krum_scores(stack(clients), f)
    idx = int(np.argmin(scores))
    return idx, clients[idx].copy()


def fedprox_penalty(w: ParamSet, w_global: ParamSet, mu: float) -> float:
    w.check_congruent(w_global)
    diff = w.flat() - w_global.flat()
    return 0.5 * mu * float(diff @ diff)


def fedprox_local_loss(base_loss: float, w: ParamSet, w_global: ParamSet, mu: float) -> float:
    return base_loss + fedprox_penalty(w, w_global, mu)


def fedprox_grad(w: ParamSet, w_global: ParamSet, mu: float) -> ParamSet:
    """Gradient of the proximal term, ``mu * (w - w_global)``."""
    w.check_congruent(w_global)
    return ParamSet((name, mu * (a - b)) for (name, a), (_, b) in zip(w, w_global))


def aggregate(cfg: StrategyConfig, clients: Sequence[ParamSet], counts: Sequence[int],
              global_params: ParamSet, state: ServerMomentumState | None = None):
    """Dispatch one round of aggregation. Returns ``(new_global, new_state)``."""
    state = state or ServerMomentumState()
    if len(clients) != len(counts):
        raise ShapeError("one sample count per client is required")
    kind = cfg.kind
    if kind in ("average", "fedprox"):
        return aggregate_average(clients, counts, cfg.sample_weighted), state
    if kind == "median":
        return aggregate_median(clients), state
    if kind == "trimmed_mean":
        return aggregate_trimmed_mean(clients, cfg.trim_fraction), state
    if kind == "momentum":
        return aggregate_momentum(clients, global_params, state, cfg.momentum_mu, counts,
                                  cfg.sample_weighted)
    if kind == "nesterov":
        return aggregate_nesterov(clients, global_params, state, cfg.momentum_mu, counts,
                                  cfg.sample_weighted)
    _, chosen = krum_select(clients, cfg.krum_f_for(len(clients)))
    return chosen, state
