"""Dense float64 arithmetic shared by the models and the federation engine.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. A
:class:`ParamSet` is the ordered, named bundle of every trainable tensor of a
model and is the unit clients and server exchange.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator
from dataclasses import dataclass, field

import numpy as np

PROB_EPS = 1e-12
# sigmoid(+-36) is still strictly inside (0, 1) in float64.
SIGMOID_CLAMP = 36.0
# exp(-700) is the smallest exponent that stays a normal positive double.
SOFTMAX_FLOOR = -700.0


class ShapeError(ValueError):
    """Raised when tensor or ParamSet shapes do not line up."""


def as_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Logistic function; inputs are clamped to [-36, 36] so outputs stay in (0, 1)."""
    z = np.clip(np.asarray(x, dtype=np.float64), -SIGMOID_CLAMP, SIGMOID_CLAMP)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax.

    Rows are shifted by their maximum and the shifted logits are floored at
    -700, so no probability underflows to exactly zero.
    """
    z = as_matrix(x)
    z = np.maximum(z - z.max(axis=1, keepdims=True), SOFTMAX_FLOOR)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def silu(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x * sigmoid(x)


def silu_grad(x: np.ndarray) -> np.ndarray:
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def loss(predictions: np.ndarray, targets: np.ndarray, task: str) -> float:
    """Mean cross-entropy of post-activation probabilities.

    ``task`` is ``"binary"`` (a single sigmoid column, targets in {0, 1}) or
    ``"multiclass"`` (softmax rows, one-hot targets). Probabilities are
    clamped to ``[1e-12, 1]`` inside the logarithm.
    """
    p = as_matrix(predictions)
    t = as_matrix(targets)
    if p.shape != t.shape:
        raise ShapeError(f"predictions {p.shape} and targets {t.shape} differ")
    if p.shape[0] == 0:
        raise ShapeError("loss of an empty batch")
    tol = 1e-9
    if np.any(p < -tol) or np.any(p > 1.0 + tol) or not np.all(np.isfinite(p)):
        raise ValueError("predictions must be probabilities in [0, 1]")
    pc = np.clip(p, PROB_EPS, 1.0)
    if task == "binary":
        if p.shape[1] != 1:
            raise ShapeError(f"binary task expects one output column, got {p.shape[1]}")
        qc = np.clip(1.0 - p, PROB_EPS, 1.0)
        per_sample = -(t * np.log(pc) + (1.0 - t) * np.log(qc))[:, 0]
    elif task == "multiclass":
        per_sample = -(t * np.log(pc)).sum(axis=1)
    else:
        raise ValueError(f"unknown task {task!r}")
    return float(max(per_sample.mean(), 0.0))


class ParamSet:
    """Ordered mapping of parameter names to float64 arrays.

    Two ParamSets of the same architecture are congruent: same names, same
    order, same shapes. ``flat()`` concatenates entries in that canonical
    order, which is the coordinate system the aggregators work in.
    """

    def __init__(self, entries=()):
        items = entries.items() if isinstance(entries, dict) else entries
        self._entries: dict[str, np.ndarray] = {}
        for name, arr in items:
            if name in self._entries:
                raise ValueError(f"duplicate parameter name {name!r}")
            self._entries[name] = np.array(arr, dtype=np.float64)

    def __getitem__(self, name: str) -> np.ndarray:
        return self._entries[name]

    def __iter__(self) -> Iterator[tuple[str, np.ndarray]]:
        return iter(self._entries.items())

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        shapes = ", ".join(f"{k}{tuple(v.shape)}" for k, v in self._entries.items())
        return f"ParamSet({shapes})"

    @property
    def names(self) -> list[str]:
        return list(self._entries)

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        return [v.shape for v in self._entries.values()]

    @property
    def size(self) -> int:
        return sum(v.size for v in self._entries.values())

    def copy(self) -> ParamSet:
        return ParamSet(self._entries)

    def flat(self) -> np.ndarray:
        if not self._entries:
            return np.zeros(0)
        return np.concatenate([v.ravel() for v in self._entries.values()])

    def with_flat(self, vec: np.ndarray) -> ParamSet:
        """A congruent ParamSet whose values come from ``vec`` in canonical order."""
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.size,):
            raise ShapeError(f"flat vector of length {vec.size} does not fit {self.size} parameters")
        out, pos = [], 0
        for name, arr in self._entries.items():
            out.append((name, vec[pos:pos + arr.size].reshape(arr.shape)))
            pos += arr.size
        return ParamSet(out)

    def zeros_like(self) -> ParamSet:
        return ParamSet((k, np.zeros_like(v)) for k, v in self._entries.items())

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> ParamSet:
        return ParamSet((k, fn(v)) for k, v in self._entries.items())

    def check_congruent(self, other: ParamSet) -> None:
        if self.names != other.names:
            raise ShapeError(f"parameter names differ: {self.names} vs {other.names}")
        for name, a, b in zip(self.names, self.shapes, other.shapes):
            if a != b:
                raise ShapeError(f"parameter {name!r} has shape {a} vs {b}")

    def equals(self, other: ParamSet) -> bool:
        """Bit-exact equality of names, shapes and values."""
        if self.names != other.names or self.shapes != other.shapes:
            return False
        return all(np.array_equal(a, b) for (_, a), (_, b) in zip(self, other))


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for one ParamSet."""

    first_moment: ParamSet
    second_moment: ParamSet
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = field(default=0)

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.lr <= 0 or self.epsilon <= 0:
            raise ValueError("Adam lr and epsilon must be positive")

    @classmethod
    def zeros(cls, params: ParamSet, **hyper) -> AdamState:
        return cls(params.zeros_like(), params.zeros_like(), **hyper)


def adam_step(state: AdamState, params: ParamSet, grads: ParamSet) -> ParamSet:
    """One Adam update; advances ``state`` in place and returns new params."""
    params.check_congruent(grads)
    params.check_congruent(state.first_moment)
    for name, g in grads:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient in {name!r}")

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_m, new_v, new_p = [], [], []
    for (name, p), (_, g), (_, m), (_, v) in zip(params, grads, state.first_moment, state.second_moment):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        update = state.lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
        new_m.append((name, m))
        new_v.append((name, v))
        new_p.append((name, p - update))
    state.first_moment = ParamSet(new_m)
    state.second_moment = ParamSet(new_v)
    return ParamSet(new_p)


def finite_diff_grad(f: Callable[[ParamSet], float], params: ParamSet, h: float = 1e-5) -> ParamSet:
    """Central-difference gradient of ``f`` at ``params``, one scalar at a time."""
    if h <= 0:
        raise ValueError("step h must be positive")
    base = params.flat()
    grad = np.empty_like(base)
    for i in range(base.size):
        orig = base[i]
        base[i] = orig + h
        fp = f(params.with_flat(base))
        base[i] = orig - h
        fm = f(params.with_flat(base))
        base[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite objective at coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * h)
    return params.with_flat(grad)
