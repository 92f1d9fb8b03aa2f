"""Experiment reports: JSON, CSV, and rendered figures.

The report JSON is the single source; the CSV and the PNG figures are
derived views written next to it. Schema (one experiment run):

    {
      "setting": "S2",
      "seed": 0,
      "n_train": 85714, "n_test": 114286, "grid_k": 100,
      "methods": {
        "NO_RES":   {"average_revenue": ...},
        "M1":       {"average_revenue": ..., "n_auctions": ...,
                     "total_revenue": ..., "uncensored": ...,
                     "half_censored": ..., "full_censored": ...,
                     "skipped_updates": ...,
                     "latency_ms": {"p50": ..., "p95": ..., "p99": ...}},
        ...
      }
    }

``latency_ms`` is present only when latency was collected. See
``docs/example_report.json`` for a golden instance.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

#: canonical display order for known methods; unknown ones sort after
METHOD_ORDER = (
    "NO_RES", "PL_RES", "PL_RES_ONLINE", "M1", "M2", "M3", "M4",
    "UNCENSORED", "ORACLE",
)


def _ordered_methods(report: dict) -> list[str]:
    known = [m for m in METHOD_ORDER if m in report["methods"]]
    extra = sorted(set(report["methods"]) - set(known))
    return known + extra


def write_report_json(path, report: dict) -> None:
    with open(path, "w") as fp:
        json.dump(report, fp, indent=2, sort_keys=True)
        fp.write("\n")


def write_report_csv(path, report: dict) -> None:
    """One row per method: revenue plus censorship and latency columns."""
    fields = [
        "method", "average_revenue", "total_revenue", "n_auctions",
        "uncensored", "half_censored", "full_censored", "skipped_updates",
        "latency_p50_ms", "latency_p95_ms", "latency_p99_ms",
    ]
    with open(path, "w", newline="") as fp:
        w = csv.DictWriter(fp, fieldnames=fields)
        w.writeheader()
        for method in _ordered_methods(report):
            m = report["methods"][method]
            row = {"method": method}
            for f in fields[1:8]:
                if f in m:
                    row[f] = m[f]
            lat = m.get("latency_ms")
            if lat:
                row["latency_p50_ms"] = lat["p50"]
                row["latency_p95_ms"] = lat["p95"]
                row["latency_p99_ms"] = lat["p99"]
            w.writerow(row)


def plot_revenue_by_method(path, report: dict) -> None:
    methods = _ordered_methods(report)
    values = [report["methods"][m]["average_revenue"] / 1e6 for m in methods]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    bars = ax.bar(methods, values, color="#4878cf")
    for b, v in zip(bars, values):
        ax.text(b.get_x() + b.get_width() / 2, v, f"{v:.3f}",
                ha="center", va="bottom", fontsize=8)
    ax.set_ylabel("average revenue per auction (units)")
    ax.set_title(
        f"setting {report.get('setting', '?')}, seed {report.get('seed', '?')}, "
        f"{report.get('n_test', '?')} test auctions"
    )
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_tuning_surface(path, surface: list[dict], x_name: str, y_name: str) -> None:
    """Heatmap of average revenue over a 2-parameter tuning grid.

    Extra swept parameters are marginalized by max."""
    xs = sorted({c[x_name] for c in surface})
    ys = sorted({c[y_name] for c in surface})
    z = np.full((len(ys), len(xs)), np.nan)
    for c in surface:
        i = ys.index(c[y_name])
        j = xs.index(c[x_name])
        v = c["average_revenue"]
        if np.isnan(z[i, j]) or v > z[i, j]:
            z[i, j] = v
    fig, ax = plt.subplots(figsize=(7, 5))
    im = ax.imshow(z / 1e6, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(xs)), [f"{v:g}" for v in xs], rotation=45)
    ax.set_yticks(range(len(ys)), [f"{v:g}" for v in ys])
    ax.set_xlabel(x_name)
    ax.set_ylabel(y_name)
    fig.colorbar(im, ax=ax, label="average revenue (units)")
    ax.set_title("tuning surface")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_latency_histogram(path, latencies_ms: np.ndarray) -> None:
    arr = np.asarray(latencies_ms, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.hist(arr, bins=60, color="#4878cf")
    for q, style in ((50, ":"), (95, "--"), (99, "-")):
        v = float(np.percentile(arr, q))
        ax.axvline(v, color="crimson", linestyle=style, label=f"p{q} = {v:.3f} ms")
    ax.set_xlabel("decision+update latency (ms)")
    ax.set_ylabel("auctions")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(out_dir, report: dict, surface: list[dict] | None = None,
                  surface_axes: tuple[str, str] | None = None,
                  latencies_ms: np.ndarray | None = None) -> list[Path]:
    """Write the JSON/CSV pair and every figure the inputs support.

    Returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    p = out / "report.json"
    write_report_json(p, report)
    written.append(p)
    p = out / "report.csv"
    write_report_csv(p, report)
    written.append(p)
    p = out / "revenue_by_method.png"
    plot_revenue_by_method(p, report)
    written.append(p)
    if surface and surface_axes:
        p = out / "tuning_surface.png"
        plot_tuning_surface(p, surface, *surface_axes)
        written.append(p)
    if latencies_ms is not None and len(latencies_ms):
        p = out / "latency_histogram.png"
        plot_latency_histogram(p, latencies_ms)
        written.append(p)
    return written
