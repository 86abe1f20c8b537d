"""Synchronous federated training: broadcast, local Adam training, aggregation, evaluation."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .aggregation import ServerMomentumState, StrategyConfig, aggregate, fedprox_grad
from .data import ClientShard, Dataset, check_partition
from .models import Architecture, build_model, encode_targets, init_model, make_architecture
from .numeric import AdamState, ParamSet, adam_step, loss

log = logging.getLogger(__name__)

DEFAULT_ROUNDS = {"kan": 20, "mlp": 60}
WEIGHTS_FORMAT = "fedkan-params"
WEIGHTS_VERSION = 1


@dataclass(frozen=True)
class FederationConfig:
    model_kind: str = "kan"
    num_rounds: int | None = None
    local_epochs: int = 3
    batch_size: int = 64
    lr: float = 0.005
    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    seed: int = 0
    hidden: tuple[int, ...] = (25, 50)
    persist_optimizer: bool = False

    def __post_init__(self):
        if self.num_rounds is None:
            object.__setattr__(self, "num_rounds", DEFAULT_ROUNDS.get(self.model_kind, 20))
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.num_rounds < 1:
            raise ValueError("num_rounds must be >= 1")
        if self.local_epochs < 0:
            raise ValueError("local_epochs must be >= 0")
        if self.batch_size < 1 or self.lr <= 0:
            raise ValueError("batch_size must be >= 1 and lr > 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class RoundRecord:
    round: int
    global_test_accuracy: float
    global_test_loss: float
    per_client_train_loss: list[float]
    wall_time_ms: float = 0.0


@dataclass
class FederationResult:
    records: list[RoundRecord]
    params: ParamSet
    arch: Architecture


class ClientTrainingError(RuntimeError):
    pass


def client_rng(seed: int, round_idx: int, client_id: int) -> np.random.Generator:
    """Independent stream per (seed, round, client); execution order does not matter."""
    return np.random.default_rng(np.random.SeedSequence([seed, round_idx, client_id]))


def train_on_client(model, x: np.ndarray, targets: np.ndarray, epochs: int, batch_size: int,
                    rng: np.random.Generator, state: AdamState | None = None,
                    lr: float = 0.005, prox: tuple[ParamSet, float] | None = None):
    """Mini-batch Adam on one client's data, in place on ``model``.

    Each epoch visits a fresh permutation of the samples. With ``prox =
    (w_global, mu)`` the proximal gradient ``mu * (w - w_global)`` is added
    to every step. Returns ``(params, mean loss of the last epoch, state)``.
    """
    n = x.shape[0]
    if n == 0:
        raise ClientTrainingError("client shard is empty")
    if state is None:
        state = AdamState.zeros(model.params, lr=lr)
    task = model.arch.task
    last_loss = float("nan")
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            probs, cache = model.forward(x[idx])
            batch_loss = loss(probs, targets[idx], task)
            if not np.isfinite(batch_loss):
                raise ClientTrainingError("non-finite training loss")
            total += batch_loss * idx.size
            grads = model.backward(cache, probs, targets[idx])
            if prox is not None:
                w_global, mu = prox
                pg = fedprox_grad(model.params, w_global, mu)
                grads = ParamSet((k, g + p) for (k, g), (_, p) in zip(grads, pg))
            model.params = adam_step(state, model.params, grads)
        last_loss = total / n
    return model.params.copy(), last_loss, state


def evaluate(model, test: Dataset) -> tuple[float, float]:
    """Accuracy and mean cross-entropy. A sigmoid output of exactly 0.5 predicts class 1."""
    if len(test) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    probs = model.predict_proba(test.features)
    if probs.shape[1] == 1:
        pred = (probs[:, 0] >= 0.5).astype(np.int64)
    else:
        pred = np.argmax(probs, axis=1)
    acc = float(np.mean(pred == test.labels))
    return acc, loss(probs, encode_targets(test.labels, probs.shape[1]), model.arch.task)


class Federation:
    """One experiment: a global model, K client shards and a strategy."""

    def __init__(self, train: Dataset, test: Dataset, shards: list[ClientShard],
                 cfg: FederationConfig, arch: Architecture | None = None, timing: bool = True):
        check_partition(shards, len(train))
        self.train, self.test, self.shards, self.cfg = train, test, shards, cfg
        self.arch = arch or make_architecture(cfg.model_kind, train.n_features,
                                              train.class_count, cfg.hidden)
        self.timing = timing
        self.global_model = init_model(self.arch, cfg.seed)
        self.agg_state = ServerMomentumState()
        self.round_idx = 0
        self._targets = encode_targets(train.labels, self.arch.widths[-1])
        self._client_states: dict[int, AdamState] = {}

    @property
    def global_params(self) -> ParamSet:
        return self.global_model.params

    def train_client(self, shard: ClientShard, snapshot: ParamSet):
        cfg = self.cfg
        model = build_model(self.arch, snapshot)
        prox = None
        if cfg.strategy.kind == "fedprox":
            prox = (snapshot, cfg.strategy.fedprox_mu)
        state = self._client_states.get(shard.client_id) if cfg.persist_optimizer else None
        rng = client_rng(cfg.seed, self.round_idx, shard.client_id)
        try:
            params, train_loss, state = train_on_client(
                model, self.train.features[shard.indices], self._targets[shard.indices],
                cfg.local_epochs, cfg.batch_size, rng, state, cfg.lr, prox)
        except (ClientTrainingError, FloatingPointError) as exc:
            raise ClientTrainingError(
                f"round {self.round_idx}, client {shard.client_id}: {exc}") from exc
        if cfg.persist_optimizer:
            self._client_states[shard.client_id] = state
        return params, train_loss

    def run_round(self) -> RoundRecord:
        self.round_idx += 1
        t0 = time.perf_counter()
        snapshot = self.global_model.params.copy()
        results = [self.train_client(shard, snapshot) for shard in self.shards]
        client_params = [p for p, _ in results]
        counts = [len(s) for s in self.shards]
        new_params, self.agg_state = aggregate(self.cfg.strategy, client_params, counts,
                                               snapshot, self.agg_state)
        self.global_model.params = new_params
        acc, test_loss = evaluate(self.global_model, self.test)
        elapsed = (time.perf_counter() - t0) * 1000.0 if self.timing else 0.0
        record = RoundRecord(self.round_idx, acc, test_loss, [client_loss for _, client_loss in results], elapsed)
        log.debug("round %d: acc=%.4f loss=%.4f", record.round, acc, test_loss)
        return record

    def run(self) -> FederationResult:
        records = [self.run_round() for _ in range(self.cfg.num_rounds)]
        return FederationResult(records, self.global_params.copy(), self.arch)


def run_federation(train: Dataset, test: Dataset, shards: list[ClientShard],
                   cfg: FederationConfig, timing: bool = True) -> FederationResult:
    return Federation(train, test, shards, cfg, timing=timing).run()


def run_round(fed: Federation) -> RoundRecord:
    return fed.run_round()


def save_params(path, params: ParamSet, arch: Architecture | None = None) -> None:
    """Write a ParamSet as JSON: entry names, shapes and row-major values.

    Floats are written with ``repr`` precision, so reloading is exact.
    """
    doc = {"format": WEIGHTS_FORMAT, "version": WEIGHTS_VERSION}
    if arch is not None:
        doc["architecture"] = {
            "kind": arch.kind,
            "widths": list(arch.widths),
            "spline_order": arch.grid.order,
            "grid_intervals": arch.grid.intervals,
            "grid_range": [arch.grid.t_min, arch.grid.t_max],
            "input_clip": arch.input_clip,
        }
    doc["entries"] = [
        {"name": name, "shape": list(arr.shape), "values": arr.ravel().tolist()}
        for name, arr in params
    ]
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_params(path) -> tuple[ParamSet, Architecture | None]:
    from .models import SplineGrid

    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != WEIGHTS_FORMAT or doc.get("version") != WEIGHTS_VERSION:
        raise ValueError(f"{path} is not a {WEIGHTS_FORMAT} v{WEIGHTS_VERSION} file")
    params = ParamSet(
        (e["name"], np.asarray(e["values"], dtype=np.float64).reshape(e["shape"]))
        for e in doc["entries"]
    )
    arch = None
    if "architecture" in doc:
        a = doc["architecture"]
        grid = SplineGrid(a["spline_order"], a["grid_intervals"], *a["grid_range"])
        arch = Architecture(a["kind"], tuple(a["widths"]), grid, a["input_clip"])
    return params, arch
