"""Experiment-grid configuration files (JSON).

Schema, with defaults::

    {
      "name": "optional label",
      "datasets": [                                   # required, non-empty
        {"name": "blobs", "synthetic": {"n_samples": 2000, "n_features": 8,
                                        "class_count": 2, "cluster_separation": 3.0,
                                        "label_noise": 0.05, "seed": 0}},
        {"name": "gender", "csv": "gender.csv", "schema": "gender"},
        {"name": "mine", "csv": "/abs/mine.csv",
         "schema": {"label_column": "y", "categorical_columns": [],
                    "drop_columns": [], "delimiter": ","},
         "split_seed": 0}
      ],
      "models": ["kan", "mlp"],
      "strategies": ["average", {"kind": "trimmed_mean", "trim_fraction": 0.2,
                                 "label": "trim20"}],         # default: all seven
      "client_counts": [3, 5, 10, 20],
      "seeds": [42],
      "partition": {"kind": "uneven", "min_size": 1}
                 | {"kind": "dirichlet", "alpha": 0.5},
      "test_fraction": 0.2,
      "federation": {"local_epochs": 3, "batch_size": 64, "lr": 0.005,
                     "rounds": {"kan": 20, "mlp": 60}, "hidden": [25, 50],
                     "persist_optimizer": false},
      "overrides": [{"when": {"model": "mlp", "client_count": 20},
                     "set": {"lr": 0.001}}],
      "timing": false,
      "workers": 1
    }

Relative CSV paths resolve against ``$FEDKAN_DATA_DIR`` when set, otherwise
against the directory holding the config file. Unknown keys are rejected.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..aggregation import HYPERPARAMETERS, STRATEGIES, StrategyConfig
from ..data import CsvSchema, SyntheticSpec, get_schema
from ..federation import DEFAULT_ROUNDS
from ..models import MODEL_KINDS

DATA_DIR_ENV = "FEDKAN_DATA_DIR"
DEFAULT_CLIENT_COUNTS = (3, 5, 10, 20)
DEFAULT_SEEDS = (42,)

_TOP_KEYS = {"name", "datasets", "models", "strategies", "client_counts", "seeds",
             "partition", "test_fraction", "federation", "overrides", "timing", "workers"}
_DATASET_KEYS = {"name", "synthetic", "csv", "schema", "split_seed"}
_FEDERATION_KEYS = {"local_epochs", "batch_size", "lr", "rounds", "hidden", "persist_optimizer"}
_OVERRIDE_KEYS = {"when", "set"}
_SELECTOR_KEYS = {"dataset", "model", "strategy", "client_count", "seed"}
_PATCH_KEYS = {"local_epochs", "batch_size", "lr", "num_rounds", "persist_optimizer"}


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending key path."""


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _check_keys(obj, allowed: set[str], path: str):
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        _fail(f"{path}.{unknown[0]}", f"unknown key; allowed keys are {sorted(allowed)}")


def _list(obj, path: str, default=None) -> list:
    if obj is None:
        if default is None:
            _fail(path, "is required")
        return list(default)
    if not isinstance(obj, list) or not obj:
        _fail(path, "must be a non-empty list")
    return obj


def _int(value, path: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        _fail(path, f"must be an integer >= {minimum}, got {value!r}")
    return value


@dataclass(frozen=True)
class DatasetSource:
    name: str
    synthetic: SyntheticSpec | None = None
    csv: Path | None = None
    schema: CsvSchema | None = None
    split_seed: int = 0


@dataclass(frozen=True)
class Override:
    when: dict
    patch: dict

    def matches(self, cell) -> bool:
        return all(str(getattr(cell, k)) == str(v) for k, v in self.when.items())


@dataclass(frozen=True)
class ExperimentGrid:
    datasets: tuple[DatasetSource, ...]
    models: tuple[str, ...] = MODEL_KINDS
    strategies: tuple[tuple[str, StrategyConfig], ...] = ()
    client_counts: tuple[int, ...] = DEFAULT_CLIENT_COUNTS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    partition: dict = field(default_factory=lambda: {"kind": "uneven", "min_size": 1})
    test_fraction: float = 0.2
    federation: dict = field(default_factory=dict)
    overrides: tuple[Override, ...] = ()
    timing: bool = False
    workers: int = 1
    name: str = ""
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def cells(self) -> list:
        from .grid import Cell

        out = [
            Cell(d.name, m, label, k, s)
            for d in self.datasets
            for m in self.models
            for label, _ in self.strategies
            for k in self.client_counts
            for s in self.seeds
        ]
        return sorted(out, key=lambda c: c.sort_key)

    def strategy(self, label: str) -> StrategyConfig:
        return dict(self.strategies)[label]

    def dataset(self, name: str) -> DatasetSource:
        return {d.name: d for d in self.datasets}[name]


def _parse_dataset(entry, path: str, base_dir: Path) -> DatasetSource:
    _check_keys(entry, _DATASET_KEYS, path)
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        _fail(f"{path}.name", "must be a non-empty string")
    split_seed = _int(entry.get("split_seed", 0), f"{path}.split_seed")
    has_syn, has_csv = "synthetic" in entry, "csv" in entry
    if has_syn == has_csv:
        _fail(path, "exactly one of 'synthetic' or 'csv' is required")
    if has_syn:
        syn = entry["synthetic"]
        _check_keys(syn, set(SyntheticSpec.__dataclass_fields__), f"{path}.synthetic")
        try:
            spec = SyntheticSpec(**syn)
        except (TypeError, ValueError) as exc:
            _fail(f"{path}.synthetic", str(exc))
        return DatasetSource(name, synthetic=spec, split_seed=split_seed)

    schema = entry.get("schema", name)
    if isinstance(schema, str):
        try:
            schema = get_schema(schema)
        except KeyError as exc:
            _fail(f"{path}.schema", exc.args[0])
    else:
        _check_keys(schema, {"label_column", "categorical_columns", "drop_columns", "delimiter"},
                    f"{path}.schema")
        if "label_column" not in schema:
            _fail(f"{path}.schema.label_column", "is required")
        schema = CsvSchema.from_dict(schema)
    csv_path = Path(entry["csv"])
    if not csv_path.is_absolute():
        root = os.environ.get(DATA_DIR_ENV)
        csv_path = (Path(root) if root else base_dir) / csv_path
    return DatasetSource(name, csv=csv_path, schema=schema, split_seed=split_seed)


def _parse_strategy(entry, path: str) -> tuple[str, StrategyConfig]:
    if isinstance(entry, str):
        entry = {"kind": entry}
    _check_keys(entry, {"kind", "label", *HYPERPARAMETERS}, path)
    kind = entry.get("kind")
    if kind not in STRATEGIES:
        _fail(f"{path}.kind", f"unknown strategy {kind!r}; valid names are {', '.join(STRATEGIES)}")
    params = {k: v for k, v in entry.items() if k != "label"}
    try:
        cfg = StrategyConfig(**params)
    except (TypeError, ValueError) as exc:
        _fail(path, str(exc))
    return entry.get("label", kind), cfg


def parse_config(doc: dict, base_dir: Path = Path(".")) -> ExperimentGrid:
    _check_keys(doc, _TOP_KEYS, "config")
    datasets = tuple(
        _parse_dataset(d, f"config.datasets[{i}]", base_dir)
        for i, d in enumerate(_list(doc.get("datasets"), "config.datasets"))
    )
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        _fail("config.datasets", f"duplicate dataset names in {names}")

    models = _list(doc.get("models"), "config.models", MODEL_KINDS)
    for i, m in enumerate(models):
        if m not in MODEL_KINDS:
            _fail(f"config.models[{i}]", f"unknown model {m!r}; valid models are {list(MODEL_KINDS)}")
    if len(set(models)) != len(models):
        _fail("config.models", "duplicate model names")

    strategies = tuple(
        _parse_strategy(s, f"config.strategies[{i}]")
        for i, s in enumerate(_list(doc.get("strategies"), "config.strategies", STRATEGIES))
    )
    labels = [label for label, _ in strategies]
    if len(set(labels)) != len(labels):
        _fail("config.strategies", f"duplicate strategy labels {labels}; add a 'label' key")

    counts = _list(doc.get("client_counts"), "config.client_counts", DEFAULT_CLIENT_COUNTS)
    counts = [_int(k, f"config.client_counts[{i}]", 1) for i, k in enumerate(counts)]
    seeds = _list(doc.get("seeds"), "config.seeds", DEFAULT_SEEDS)
    seeds = [_int(s, f"config.seeds[{i}]") for i, s in enumerate(seeds)]
    if len(set(counts)) != len(counts) or len(set(seeds)) != len(seeds):
        _fail("config", "client_counts and seeds must not repeat")

    partition = doc.get("partition", {"kind": "uneven"})
    if not isinstance(partition, dict):
        _fail("config.partition", "expected an object")
    if partition.get("kind") == "uneven":
        _check_keys(partition, {"kind", "min_size"}, "config.partition")
        partition = {"kind": "uneven", "min_size": _int(partition.get("min_size", 1),
                                                        "config.partition.min_size", 1)}
    elif partition.get("kind") == "dirichlet":
        _check_keys(partition, {"kind", "alpha"}, "config.partition")
        alpha = partition.get("alpha", 0.5)
        if not isinstance(alpha, (int, float)) or isinstance(alpha, bool) or alpha <= 0:
            _fail("config.partition.alpha", "must be a positive number")
        partition = {"kind": "dirichlet", "alpha": float(alpha)}
    else:
        _fail("config.partition.kind", "must be 'uneven' or 'dirichlet'")

    test_fraction = doc.get("test_fraction", 0.2)
    if not isinstance(test_fraction, (int, float)) or not 0 < test_fraction < 0.5:
        _fail("config.test_fraction", "must lie in (0, 0.5)")

    fed = doc.get("federation", {})
    _check_keys(fed, _FEDERATION_KEYS, "config.federation")
    rounds = fed.get("rounds", dict(DEFAULT_ROUNDS))
    if isinstance(rounds, int):
        rounds = {m: rounds for m in MODEL_KINDS}
    _check_keys(rounds, set(MODEL_KINDS), "config.federation.rounds")
    rounds = {**DEFAULT_ROUNDS, **rounds}
    for m, r in rounds.items():
        _int(r, f"config.federation.rounds.{m}", 1)
    federation = {
        "local_epochs": _int(fed.get("local_epochs", 3), "config.federation.local_epochs"),
        "batch_size": _int(fed.get("batch_size", 64), "config.federation.batch_size", 1),
        "lr": fed.get("lr", 0.005),
        "rounds": rounds,
        "hidden": tuple(fed.get("hidden", (25, 50))),
        "persist_optimizer": bool(fed.get("persist_optimizer", False)),
    }
    if not isinstance(federation["lr"], (int, float)) or federation["lr"] <= 0:
        _fail("config.federation.lr", "must be a positive number")
    for i, h in enumerate(federation["hidden"]):
        _int(h, f"config.federation.hidden[{i}]", 1)

    overrides = []
    for i, o in enumerate(doc.get("overrides", [])):
        path = f"config.overrides[{i}]"
        _check_keys(o, _OVERRIDE_KEYS, path)
        _check_keys(o.get("when", {}), _SELECTOR_KEYS, f"{path}.when")
        _check_keys(o.get("set", {}), _PATCH_KEYS, f"{path}.set")
        overrides.append(Override(dict(o.get("when", {})), dict(o.get("set", {}))))

    workers = _int(doc.get("workers", 1), "config.workers", 1)
    timing = doc.get("timing", False)
    if not isinstance(timing, bool):
        _fail("config.timing", "must be true or false")
    return ExperimentGrid(
        datasets=datasets,
        models=tuple(models),
        strategies=strategies,
        client_counts=tuple(counts),
        seeds=tuple(seeds),
        partition=partition,
        test_fraction=float(test_fraction),
        federation=federation,
        overrides=tuple(overrides),
        timing=timing,
        workers=workers,
        name=str(doc.get("name", "")),
        raw=doc,
    )


def load_config(path) -> ExperimentGrid:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc, path.resolve().parent)
