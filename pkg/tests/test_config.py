import json
from pathlib import Path

import pytest

from fedkan.harness import ConfigError, load_config, parse_config
from fedkan.harness.grid import cell_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SYN = {"name": "blobs", "synthetic": {"n_samples": 200, "n_features": 3}}


def minimal(**extra):
    doc = {"datasets": [SYN], "models": ["kan"], "strategies": ["average"], "client_counts": [3]}
    doc.update(extra)
    return doc


def test_minimal_config_is_one_cell():
    grid = load_config(CONFIGS / "minimal.json")
    cells = grid.cells()
    assert len(cells) == 1
    c = cells[0]
    assert (c.dataset, c.model, c.strategy, c.client_count, c.seed) == ("blobs", "kan", "average", 3, 42)
    cfg = cell_config(grid, c)
    assert cfg.num_rounds == 20 and cfg.local_epochs == 3 and cfg.lr == 0.005


def test_misspelled_strategy():
    with pytest.raises(ConfigError) as err:
        parse_config(minimal(strategies=["trimed_mean"]))
    msg = str(err.value)
    assert msg.startswith("config.strategies[0].kind")
    assert "'trimed_mean'" in msg
    for name in ("average", "median", "trimmed_mean", "momentum", "nesterov", "krum", "fedprox"):
        assert name in msg


@pytest.mark.parametrize("name", ["synthetic_replica.json", "kaggle_replica.json"])
def test_replica_grid_size(name):
    grid = load_config(CONFIGS / name)
    assert len(grid.cells()) == 4 * 2 * 7 * 4


def test_defaults_fill_all_axes():
    grid = parse_config({"datasets": [SYN]})
    assert grid.models == ("kan", "mlp")
    assert len(grid.strategies) == 7
    assert grid.client_counts == (3, 5, 10, 20)
    assert grid.seeds == (42,)
    assert grid.federation["rounds"] == {"kan": 20, "mlp": 60}


@pytest.mark.parametrize(
    "doc,path",
    [
        (minimal(epochs=3), "config.epochs"),
        (minimal(federation={"epochs": 3}), "config.federation.epochs"),
        (minimal(datasets=[{"name": "x", "synthetic": {"samples": 5}}]), "config.datasets[0].synthetic.samples"),
        (minimal(strategies=[{"kind": "krum", "krum_f": -1}]), "config.strategies[0]"),
        (minimal(strategies=[{"kind": "trimmed_mean", "trim_fraction": 0.6}]), "config.strategies[0]"),
        (minimal(models=["cnn"]), "config.models[0]"),
        (minimal(client_counts=[0]), "config.client_counts[0]"),
        (minimal(partition={"kind": "dirichlet", "alpha": 0}), "config.partition.alpha"),
        (minimal(datasets=[]), "config.datasets"),
        (minimal(datasets=[{"name": "x"}]), "config.datasets[0]"),
        (minimal(strategies=["average", "average"]), "config.strategies"),
    ],
)
def test_schema_errors_carry_key_path(doc, path):
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert str(err.value).startswith(path)


def test_labelled_strategy_variants():
    grid = parse_config(minimal(strategies=[
        {"kind": "trimmed_mean", "label": "trim10", "trim_fraction": 0.1},
        {"kind": "trimmed_mean", "label": "trim30", "trim_fraction": 0.3},
    ]))
    assert grid.strategy("trim30").trim_fraction == 0.3
    assert [c.strategy for c in grid.cells()] == ["trim10", "trim30"]


def test_overrides_patch_matching_cells():
    grid = parse_config(minimal(models=["kan", "mlp"], overrides=[
        {"when": {"model": "mlp"}, "set": {"lr": 0.001, "num_rounds": 5}}]))
    cfgs = {c.model: cell_config(grid, c) for c in grid.cells()}
    assert cfgs["mlp"].lr == 0.001 and cfgs["mlp"].num_rounds == 5
    assert cfgs["kan"].lr == 0.005 and cfgs["kan"].num_rounds == 20


def test_rounds_as_int():
    grid = parse_config(minimal(federation={"rounds": 7}))
    assert grid.federation["rounds"] == {"kan": 7, "mlp": 7}


def test_csv_path_resolution(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(minimal(datasets=[{"name": "gender", "csv": "g.csv"}])))
    monkeypatch.delenv("FEDKAN_DATA_DIR", raising=False)
    assert load_config(cfg).datasets[0].csv == tmp_path / "g.csv"
    monkeypatch.setenv("FEDKAN_DATA_DIR", "/data/kaggle")
    assert load_config(cfg).datasets[0].csv == Path("/data/kaggle/g.csv")


def test_named_schema_lookup():
    grid = parse_config(minimal(datasets=[{"name": "cardio", "csv": "/x.csv"}]))
    assert grid.datasets[0].schema.delimiter == ";"
    with pytest.raises(ConfigError, match="schema"):
        parse_config(minimal(datasets=[{"name": "iris", "csv": "/x.csv"}]))


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
