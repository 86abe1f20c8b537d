"""Final-round summary tables and long-format learning curves from a metrics CSV."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from pathlib import Path

from ..aggregation import STRATEGIES
from .grid import MetricsError, read_metrics

SUMMARY_COLUMNS = ("dataset", "strategy", "client_count", "model", "accuracy_pct", "seeds")
OVERVIEW_COLUMNS = ("dataset", "client_count", "model", "mean_accuracy_pct",
                    "best_accuracy_pct", "best_strategy")
SELECT_KEYS = ("dataset", "model", "strategy", "client_count", "seed")


def _strategy_rank(label: str):
    return (STRATEGIES.index(label) if label in STRATEGIES else len(STRATEGIES), label)


def pct(acc: float) -> str:
    return f"{100.0 * acc:.2f}"


def final_accuracies(rows: list[dict]) -> dict[tuple, tuple[float, int]]:
    """Last-round accuracy per (dataset, strategy, client_count, model), averaged over seeds.

    Values are ``(mean accuracy, number of seeds)``.
    """
    last: dict[tuple, tuple[int, float]] = {}
    for r in rows:
        key = (r["dataset"], r["strategy"], int(r["client_count"]), r["model"], int(r["seed"]))
        rnd = int(r["round"])
        if key not in last or rnd > last[key][0]:
            last[key] = (rnd, float(r["accuracy"]))
    per_cell: dict[tuple, list[float]] = defaultdict(list)
    for key in sorted(last):
        per_cell[key[:4]].append(last[key][1])
    return {key: (sum(v) / len(v), len(v)) for key, v in per_cell.items()}


def summary_rows(rows: list[dict]) -> list[dict]:
    table = final_accuracies(rows)
    cells = sorted(table, key=lambda k: (k[0], _strategy_rank(k[1]), k[2], k[3]))
    return [
        {
            "dataset": ds, "strategy": strat, "client_count": str(k), "model": model,
            "accuracy_pct": pct(table[(ds, strat, k, model)][0]),
            "seeds": str(table[(ds, strat, k, model)][1]),
        }
        for ds, strat, k, model in cells
    ]


def overview_rows(rows: list[dict]) -> list[dict]:
    """Per (dataset, client count, model): mean over strategies and the best strategy.

    Ties for best go to the earlier strategy in canonical order.
    """
    groups: dict[tuple, list[tuple[float, str]]] = defaultdict(list)
    for (ds, strat, k, model), (acc, _) in final_accuracies(rows).items():
        groups[(ds, k, model)].append((acc, strat))
    out = []
    for ds, k, model in sorted(groups):
        entries = sorted(groups[(ds, k, model)], key=lambda e: _strategy_rank(e[1]))
        best_acc, best_strat = max(entries, key=lambda e: e[0])
        out.append({
            "dataset": ds, "client_count": str(k), "model": model,
            "mean_accuracy_pct": pct(sum(a for a, _ in entries) / len(entries)),
            "best_accuracy_pct": pct(best_acc),
            "best_strategy": best_strat,
        })
    return out


def render_table(rows: list[dict]) -> str:
    """Aligned text: one block per dataset, strategies down, client count x model across."""
    summary = summary_rows(rows)
    overview = overview_rows(rows)
    counts = sorted({int(r["client_count"]) for r in summary})
    models = sorted({r["model"] for r in summary})
    columns = [(k, m) for k in counts for m in models]
    lookup = {(r["dataset"], r["strategy"], int(r["client_count"]), r["model"]): r["accuracy_pct"]
              for r in summary}
    ov = {(r["dataset"], int(r["client_count"]), r["model"]): r for r in overview}

    header = ["dataset / strategy"] + [f"{k} clients {m.upper()}" for k, m in columns]
    body: list[list[str]] = []
    for ds in sorted({r["dataset"] for r in summary}):
        body.append([f"[{ds}]"] + [""] * len(columns))
        strategies = sorted({r["strategy"] for r in summary if r["dataset"] == ds},
                            key=_strategy_rank)
        for s in strategies:
            body.append([s] + [lookup.get((ds, s, k, m), "-") for k, m in columns])
        body.append(["mean over strategies"] +
                    [ov[(ds, k, m)]["mean_accuracy_pct"] if (ds, k, m) in ov else "-"
                     for k, m in columns])
        body.append(["best strategy"] +
                    [ov[(ds, k, m)]["best_accuracy_pct"] if (ds, k, m) in ov else "-"
                     for k, m in columns])
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]

    def fmt(row):
        return "  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                         for i, (c, w) in enumerate(zip(row, widths))).rstrip()

    lines = [fmt(header), "  ".join("-" * w for w in widths)] + [fmt(r) for r in body]
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def summarize(metrics_path, out_prefix=None) -> dict[str, Path]:
    """Write ``<prefix>.summary.csv``, ``<prefix>.overview.csv`` and ``<prefix>.summary.txt``."""
    metrics_path = Path(metrics_path)
    rows = read_metrics(metrics_path)
    prefix = Path(out_prefix) if out_prefix else metrics_path.with_suffix("")
    paths = {
        "summary": prefix.with_name(prefix.name + ".summary.csv"),
        "overview": prefix.with_name(prefix.name + ".overview.csv"),
        "table": prefix.with_name(prefix.name + ".summary.txt"),
    }
    _write_csv(paths["summary"], SUMMARY_COLUMNS, summary_rows(rows))
    _write_csv(paths["overview"], OVERVIEW_COLUMNS, overview_rows(rows))
    paths["table"].write_text(render_table(rows), encoding="utf-8")
    return paths


def parse_selector(text: str) -> dict[str, str]:
    """``"dataset=airline,model=kan,client_count=5"`` -> dict; keys are validated."""
    selector = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = part.partition("=")
        if not sep or not value:
            raise ValueError(f"bad selector term {part!r}; expected key=value")
        if key not in SELECT_KEYS:
            raise ValueError(f"unknown selector key {key!r}; valid keys are {', '.join(SELECT_KEYS)}")
        selector[key] = value
    return selector


def emit_curves(rows: list[dict], selector: dict[str, str], metric: str = "accuracy") -> list[dict]:
    """Long-format ``(round, series, value)`` rows for every selected cell.

    The series label names whatever varies across the selected cells (for
    example ``strategy=median``). With ``metric="both"`` each label gets an
    ``:accuracy`` and a ``:loss`` variant. Values are copied verbatim.
    """
    if metric not in ("accuracy", "loss", "both"):
        raise ValueError("metric must be accuracy, loss or both")
    chosen = [r for r in rows if all(r[k] == v for k, v in selector.items())]
    if not chosen:
        raise MetricsError(f"selector {selector} matches no metrics rows")
    varying = [k for k in SELECT_KEYS if len({r[k] for r in chosen}) > 1]
    metrics = ("accuracy", "loss") if metric == "both" else (metric,)

    def order(r):
        return (r["dataset"], r["model"], _strategy_rank(r["strategy"]), int(r["client_count"]),
                int(r["seed"]), int(r["round"]))

    out = []
    for m in metrics:
        for r in sorted(chosen, key=order):
            label = ",".join(f"{k}={r[k]}" for k in varying) or "cell"
            if metric == "both":
                label = f"{label}:{m}"
            out.append({"round": r["round"], "series": label, "value": r[m]})
    return out


def curves_csv(curve_rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=("round", "series", "value"), lineterminator="\n")
    w.writeheader()
    w.writerows(curve_rows)
    return buf.getvalue()
