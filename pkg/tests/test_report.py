from pathlib import Path

import pytest

from fedkan.harness import emit_curves, parse_selector, read_metrics, summarize
from fedkan.harness.grid import METRICS_COLUMNS, MetricsError
from fedkan.harness.report import final_accuracies, overview_rows, render_table, summary_rows

FIXTURES = Path(__file__).parent / "fixtures"


def row(dataset="d", model="kan", strategy="average", k=3, seed=0, rnd=1, acc=0.5, loss=0.7):
    return {"dataset": dataset, "model": model, "strategy": strategy, "client_count": str(k),
            "seed": str(seed), "round": str(rnd), "accuracy": repr(acc), "loss": repr(loss),
            "wall_time_ms": "0.0"}


@pytest.fixture
def golden():
    return read_metrics(FIXTURES / "golden_metrics.csv")


def test_single_cell_uses_final_round():
    rows = [row(rnd=1, acc=0.5), row(rnd=3, acc=0.8125), row(rnd=2, acc=0.7)]
    s = summary_rows(rows)
    assert len(s) == 1 and s[0]["accuracy_pct"] == "81.25" and s[0]["seeds"] == "1"


def test_seed_mean():
    rows = [row(seed=0, acc=0.90), row(seed=1, acc=0.92)]
    assert summary_rows(rows)[0]["accuracy_pct"] == "91.00"
    assert final_accuracies(rows)[("d", "average", 3, "kan")][1] == 2


def test_golden_table(golden):
    expected = (FIXTURES / "golden_table.txt").read_text(encoding="utf-8")
    assert render_table(golden) == expected


def test_golden_files(tmp_path):
    src = FIXTURES / "golden_metrics.csv"
    metrics = tmp_path / "golden.csv"
    metrics.write_bytes(src.read_bytes())
    paths = summarize(metrics)
    assert paths["table"].read_bytes() == (FIXTURES / "golden_table.txt").read_bytes()
    assert paths["summary"].name == "golden.summary.csv"
    lines = paths["summary"].read_text().splitlines()
    assert lines[0] == "dataset,strategy,client_count,model,accuracy_pct,seeds"
    assert "toy,average,3,kan,91.00,2" in lines
    overview = paths["overview"].read_text().splitlines()
    # MLP tie at 3 clients goes to the earlier strategy
    assert "toy,3,mlp,82.00,82.00,average" in overview


def test_best_and_mean(golden):
    ov = {(r["dataset"], r["client_count"], r["model"]): r for r in overview_rows(golden)}
    assert ov[("toy", "3", "kan")]["best_strategy"] == "median"
    assert ov[("toy", "5", "kan")]["mean_accuracy_pct"] == "87.50"


def test_cell_independence(golden):
    before = {(r["dataset"], r["strategy"], r["client_count"], r["model"]): r["accuracy_pct"]
              for r in summary_rows(golden)}
    dropped = [r for r in golden if not (r["strategy"] == "median" and r["client_count"] == "5")]
    after = {(r["dataset"], r["strategy"], r["client_count"], r["model"]): r["accuracy_pct"]
             for r in summary_rows(dropped)}
    assert all(before[k] == v for k, v in after.items())
    assert len(before) - len(after) == 2


def sweep_rows():
    rows = []
    for strat in ("average", "median", "trimmed_mean", "momentum", "nesterov", "krum", "fedprox"):
        for k in (3, 5):
            for rnd in (1, 2, 3):
                rows.append(row(strategy=strat, k=k, rnd=rnd, acc=0.1 * rnd + 0.01 * k, loss=1.0 / rnd))
    return rows


class TestCurves:
    def test_strategy_series(self):
        out = emit_curves(sweep_rows(), parse_selector("dataset=d,model=kan,client_count=5"))
        series = list(dict.fromkeys(r["series"] for r in out))
        assert len(series) == 7
        assert series[0] == "strategy=average" and series[-1] == "strategy=fedprox"
        assert len(out) == 21

    def test_client_sweep_both_metrics(self):
        out = emit_curves(sweep_rows(), parse_selector("strategy=median"), "both")
        series = sorted(set(r["series"] for r in out))
        assert series == ["client_count=3:accuracy", "client_count=3:loss",
                          "client_count=5:accuracy", "client_count=5:loss"]

    def test_values_verbatim(self):
        rows = sweep_rows()
        out = emit_curves(rows, {"strategy": "krum", "client_count": "3"}, "loss")
        src = [r["loss"] for r in rows if r["strategy"] == "krum" and r["client_count"] == "3"]
        assert [r["value"] for r in out] == src
        assert {r["series"] for r in out} == {"cell"}

    def test_empty_selection(self):
        with pytest.raises(MetricsError):
            emit_curves(sweep_rows(), {"dataset": "nope"})

    @pytest.mark.parametrize("text", ["model", "colour=red", "model="])
    def test_bad_selector(self, text):
        with pytest.raises(ValueError):
            parse_selector(text)


def test_metrics_columns_order():
    assert METRICS_COLUMNS == ("dataset", "model", "strategy", "client_count", "seed", "round",
                               "accuracy", "loss", "wall_time_ms")
