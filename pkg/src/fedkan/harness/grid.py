"""Grid execution and the metrics CSV."""

from __future__ import annotations

import csv
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .. import __version__
from ..aggregation import STRATEGIES
from ..data import load_csv, partition_dirichlet, partition_uneven, prepare_split, synth_generate
from ..federation import Federation, FederationConfig, save_params
from .config import ExperimentGrid

log = logging.getLogger(__name__)

METRICS_SCHEMA = "fedkan-metrics"
METRICS_VERSION = 1
METRICS_COLUMNS = ("dataset", "model", "strategy", "client_count", "seed", "round",
                   "accuracy", "loss", "wall_time_ms")


@dataclass(frozen=True)
class Cell:
    dataset: str
    model: str
    strategy: str
    client_count: int
    seed: int

    @property
    def sort_key(self):
        rank = STRATEGIES.index(self.strategy) if self.strategy in STRATEGIES else len(STRATEGIES)
        return (self.dataset, self.model, rank, self.strategy, self.client_count, self.seed)

    @property
    def slug(self) -> str:
        return f"{self.dataset}__{self.model}__{self.strategy}__k{self.client_count}__s{self.seed}"


@dataclass
class CellFailure:
    cell: Cell
    error: str


def format_float(x: float) -> str:
    return repr(float(x))


def cell_config(grid: ExperimentGrid, cell: Cell) -> FederationConfig:
    fed = grid.federation
    kwargs = dict(
        model_kind=cell.model,
        num_rounds=fed["rounds"][cell.model],
        local_epochs=fed["local_epochs"],
        batch_size=fed["batch_size"],
        lr=fed["lr"],
        strategy=grid.strategy(cell.strategy),
        seed=cell.seed,
        hidden=fed["hidden"],
        persist_optimizer=fed["persist_optimizer"],
    )
    for o in grid.overrides:
        if o.matches(cell):
            kwargs.update(o.patch)
    return FederationConfig(**kwargs)


@lru_cache(maxsize=8)
def _prepared(source, test_fraction: float):
    data = synth_generate(source.synthetic) if source.synthetic else load_csv(source.csv, source.schema)
    train, test, _ = prepare_split(data, test_fraction, source.split_seed)
    return train, test


def run_cell(grid: ExperimentGrid, cell: Cell, export_dir: Path | None = None) -> list[dict]:
    train, test = _prepared(grid.dataset(cell.dataset), grid.test_fraction)
    part = grid.partition
    if part["kind"] == "dirichlet":
        shards = partition_dirichlet(train, cell.client_count, part["alpha"], cell.seed)
    else:
        shards = partition_uneven(train, cell.client_count, cell.seed, part["min_size"])
    fed = Federation(train, test, shards, cell_config(grid, cell), timing=grid.timing)
    result = fed.run()
    if export_dir is not None:
        export_dir.mkdir(parents=True, exist_ok=True)
        save_params(export_dir / f"{cell.slug}.json", result.params, result.arch)
    return [
        {
            "dataset": cell.dataset,
            "model": cell.model,
            "strategy": cell.strategy,
            "client_count": str(cell.client_count),
            "seed": str(cell.seed),
            "round": str(r.round),
            "accuracy": format_float(r.global_test_accuracy),
            "loss": format_float(r.global_test_loss),
            "wall_time_ms": format_float(round(r.wall_time_ms, 3)),
        }
        for r in result.records
    ]


def _safe_run(args):
    grid, cell, export_dir = args
    try:
        return run_cell(grid, cell, export_dir), None
    except Exception as exc:  # one bad cell must not stop the grid
        log.debug("cell %s failed:\n%s", cell.slug, traceback.format_exc())
        return None, f"{type(exc).__name__}: {exc}"


def metrics_meta(grid: ExperimentGrid) -> dict:
    return {
        "schema": METRICS_SCHEMA,
        "version": METRICS_VERSION,
        "columns": list(METRICS_COLUMNS),
        "fedkan_version": __version__,
        "config": grid.raw,
    }


def run_grid(grid: ExperimentGrid, out_path, export_dir=None, workers: int | None = None,
             runner=_safe_run) -> list[CellFailure]:
    """Run every cell and write one metrics row per round.

    Rows are written cell by cell in canonical cell order and flushed after
    each cell. Failing cells are collected and returned (and written to
    ``<out>.failures.csv``); the remaining cells still run.
    """
    _prepared.cache_clear()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    export_dir = Path(export_dir) if export_dir else None
    cells = grid.cells()
    jobs = [(grid, cell, export_dir) for cell in cells]
    workers = workers or grid.workers
    failures: list[CellFailure] = []
    failures_path = out_path.with_name(out_path.name + ".failures.csv")
    failures_path.unlink(missing_ok=True)

    with out_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_COLUMNS, lineterminator="\n")
        writer.writeheader()
        fh.flush()
        if workers > 1:
            pool = ProcessPoolExecutor(max_workers=workers)
            results = pool.map(runner, jobs)
        else:
            pool = None
            results = map(runner, jobs)
        try:
            for cell, (rows, error) in zip(cells, results):
                if error is not None:
                    log.warning("cell %s failed: %s", cell.slug, error)
                    failures.append(CellFailure(cell, error))
                    continue
                writer.writerows(rows)
                fh.flush()
                log.info("cell %s done (%d rounds)", cell.slug, len(rows))
        finally:
            if pool is not None:
                pool.shutdown()

    meta_path = out_path.with_name(out_path.name + ".meta.json")
    meta_path.write_text(json.dumps(metrics_meta(grid), indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    if failures:
        with failures_path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset", "model", "strategy", "client_count", "seed", "error"])
            for f in failures:
                c = f.cell
                w.writerow([c.dataset, c.model, c.strategy, c.client_count, c.seed, f.error])
    return failures


class MetricsError(ValueError):
    pass


def read_metrics(path) -> list[dict]:
    """Rows of a metrics CSV as string dicts, after checking the header."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_COLUMNS:
            raise MetricsError(
                f"{path}: header {reader.fieldnames} does not match {list(METRICS_COLUMNS)}")
        rows = list(reader)
    if not rows:
        raise MetricsError(f"{path}: no metrics rows")
    return rows

