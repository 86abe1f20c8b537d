"""MLP and KAN classifiers with analytic backward passes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numeric import ParamSet, ShapeError, as_matrix, relu, sigmoid, softmax_rows
from .kan import KanLayer, kan_layer_backward, kan_layer_forward
from .splines import SplineGrid

MODEL_KINDS = ("kan", "mlp")
DEFAULT_HIDDEN = (25, 50)


@dataclass(frozen=True)
class Architecture:
    """Model family plus layer widths ``(inputs, hidden..., output units)``.

    A single output unit means a sigmoid head (binary task); more units
    mean a softmax head. ``input_clip`` bounds the standardized features fed
    to the first KAN layer, which then rescales them into the spline domain.
    """

    kind: str
    widths: tuple[int, ...]
    grid: SplineGrid = field(default_factory=SplineGrid)
    input_clip: float = 3.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2 or any(w <= 0 for w in self.widths):
            raise ValueError(f"layer widths must be >= 2 positive counts, got {self.widths}")
        if self.input_clip <= 0:
            raise ValueError("input_clip must be positive")

    @property
    def task(self) -> str:
        return "binary" if self.widths[-1] == 1 else "multiclass"

    @property
    def output_activation(self) -> str:
        return "sigmoid" if self.widths[-1] == 1 else "softmax"


def make_architecture(kind: str, n_features: int, n_classes: int,
                      hidden=DEFAULT_HIDDEN, **kwargs) -> Architecture:
    if n_classes < 2:
        raise ValueError("need at least two classes")
    out_units = 1 if n_classes == 2 else n_classes
    return Architecture(kind, (n_features, *hidden, out_units), **kwargs)


def encode_targets(labels: np.ndarray, out_units: int) -> np.ndarray:
    """Binary labels become a (n, 1) column; multiclass labels become one-hot rows."""
    labels = np.asarray(labels, dtype=np.int64)
    if out_units == 1:
        return labels.astype(np.float64).reshape(-1, 1)
    out = np.zeros((labels.size, out_units))
    out[np.arange(labels.size), labels] = 1.0
    return out


@dataclass
class ForwardCache:
    owner: int
    version: int
    layers: list = field(default_factory=list)


class _Model:
    def __init__(self, arch: Architecture, params: ParamSet):
        self.arch = arch
        self._version = 0
        self.params = params

    @property
    def layer_widths(self) -> list[int]:
        return list(self.arch.widths)

    @property
    def params(self) -> ParamSet:
        return self._params

    @params.setter
    def params(self, p: ParamSet):
        self.template(self.arch).check_congruent(p)
        self._params = p.copy()
        self._version += 1

    def clone(self):
        return type(self)(self.arch, self._params)

    def _head(self, logits: np.ndarray) -> np.ndarray:
        if self.arch.output_activation == "sigmoid":
            return sigmoid(logits)
        return softmax_rows(logits)

    def _check_input(self, x) -> np.ndarray:
        x = as_matrix(x)
        if x.shape[1] != self.arch.widths[0]:
            raise ShapeError(f"model expects {self.arch.widths[0]} features, got {x.shape[1]}")
        return x

    def _check_cache(self, cache: ForwardCache):
        if cache.owner != id(self) or cache.version != self._version:
            raise ValueError("forward cache is stale or belongs to a different model")

    @staticmethod
    def template(arch: Architecture) -> ParamSet:
        raise NotImplementedError

    def forward(self, x):
        raise NotImplementedError

    def backward(self, cache: ForwardCache, probs: np.ndarray, targets: np.ndarray) -> ParamSet:
        raise NotImplementedError

    def predict_proba(self, x) -> np.ndarray:
        return self.forward(x)[0]


class MlpModel(_Model):
    """Fully connected ReLU network; ``layer{i}.weight`` is (in, out)."""

    @staticmethod
    def template(arch: Architecture) -> ParamSet:
        w = arch.widths
        entries = []
        for i, (a, b) in enumerate(zip(w[:-1], w[1:])):
            entries.append((f"layer{i}.weight", np.zeros((a, b))))
            entries.append((f"layer{i}.bias", np.zeros((1, b))))
        return ParamSet(entries)

    def forward(self, x):
        a = self._check_input(x)
        cache = ForwardCache(id(self), self._version)
        n_layers = len(self.arch.widths) - 1
        for i in range(n_layers):
            z = a @ self._params[f"layer{i}.weight"] + self._params[f"layer{i}.bias"]
            cache.layers.append((a, z))
            a = relu(z) if i < n_layers - 1 else z
        return self._head(a), cache

    def backward(self, cache, probs, targets):
        self._check_cache(cache)
        probs, targets = as_matrix(probs), as_matrix(targets)
        if probs.shape != targets.shape:
            raise ShapeError(f"probs {probs.shape} vs targets {targets.shape}")
        # sigmoid+BCE and softmax+CE share the same logit gradient
        g = (probs - targets) / probs.shape[0]
        grads = {}
        for i in reversed(range(len(cache.layers))):
            a, z = cache.layers[i]
            if i < len(cache.layers) - 1:
                g = g * (z > 0)
            grads[f"layer{i}.weight"] = a.T @ g
            grads[f"layer{i}.bias"] = g.sum(axis=0, keepdims=True)
            if i > 0:
                g = g @ self._params[f"layer{i}.weight"].T
        return ParamSet((name, grads[name]) for name in self._params.names)


class KanModel(_Model):
    """Stack of :class:`KanLayer` with a sigmoid or softmax head."""

    @staticmethod
    def template(arch: Architecture) -> ParamSet:
        w, nb = arch.widths, arch.grid.n_basis
        entries = []
        for i, (a, b) in enumerate(zip(w[:-1], w[1:])):
            entries.append((f"layer{i}.base_weight", np.zeros((b, a))))
            entries.append((f"layer{i}.spline_coeffs", np.zeros((b, a, nb))))
        return ParamSet(entries)

    @property
    def layers(self) -> list[KanLayer]:
        return [
            KanLayer(self._params[f"layer{i}.base_weight"], self._params[f"layer{i}.spline_coeffs"],
                     self.arch.grid)
            for i in range(len(self.arch.widths) - 1)
        ]

    def scale_inputs(self, x: np.ndarray) -> np.ndarray:
        c = self.arch.input_clip
        return np.clip(x, -c, c) / c

    def forward(self, x):
        h = self.scale_inputs(self._check_input(x))
        cache = ForwardCache(id(self), self._version)
        for i, layer in enumerate(self.layers):
            h, layer_cache = kan_layer_forward(layer, h, need_input_grad=i > 0)
            cache.layers.append(layer_cache)
        return self._head(h), cache

    def backward(self, cache, probs, targets):
        self._check_cache(cache)
        probs, targets = as_matrix(probs), as_matrix(targets)
        if probs.shape != targets.shape:
            raise ShapeError(f"probs {probs.shape} vs targets {targets.shape}")
        g = (probs - targets) / probs.shape[0]
        grads = {}
        layers = self.layers
        for i in reversed(range(len(layers))):
            d_base, d_coeffs, g = kan_layer_backward(layers[i], cache.layers[i], g)
            grads[f"layer{i}.base_weight"] = d_base
            grads[f"layer{i}.spline_coeffs"] = d_coeffs
        return ParamSet((name, grads[name]) for name in self._params.names)


def build_model(arch: Architecture, params: ParamSet | None = None):
    cls = KanModel if arch.kind == "kan" else MlpModel
    return cls(arch, cls.template(arch) if params is None else params)


def init_model(arch: Architecture, seed: int):
    """Randomly initialized model, deterministic in ``seed``.

    MLP weights are Kaiming-uniform, U(-sqrt(6/fan_in), sqrt(6/fan_in)),
    with zero biases. KAN spline coefficients are N(0, 0.1^2) and base
    weights Xavier-uniform, U(-sqrt(6/(fan_in+fan_out)), ...).
    """
    rng = np.random.default_rng(seed)
    model = build_model(arch)
    entries = []
    for name, arr in model.params:
        if name.endswith(".bias"):
            value = np.zeros_like(arr)
        elif name.endswith(".weight"):
            bound = np.sqrt(6.0 / arr.shape[0])
            value = rng.uniform(-bound, bound, size=arr.shape)
        elif name.endswith(".base_weight"):
            bound = np.sqrt(6.0 / (arr.shape[0] + arr.shape[1]))
            value = rng.uniform(-bound, bound, size=arr.shape)
        else:
            value = rng.normal(0.0, 0.1, size=arr.shape)
        entries.append((name, value))
    model.params = ParamSet(entries)
    return model


def extract_params(model) -> ParamSet:
    return model.params.copy()


def assign_params(model, params: ParamSet):
    model.params = params
    return model


def model_forward(model, x):
    return model.forward(x)


def model_backward(model, cache, probs, targets) -> ParamSet:
    return model.backward(cache, probs, targets)
