"""Deterministic report emission (CSV and JSON) and figure rendering.

CSV columns keep their given order and floats are printed with 9
significant digits; JSON keys are sorted. Writing the same report twice
yields byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

CSV = "csv"
JSON = "json"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def emit_report(rows: list[dict], columns: list[str], fmt: str, path) -> None:
    """Write tabular rows as CSV (fixed column order) or JSON (sorted keys)."""
    path = Path(path)
    if fmt == CSV:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(row[c]) for c in columns])
    elif fmt == JSON:
        with open(path, "w") as fh:
            json.dump(_round_floats(rows), fh, sort_keys=True, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown report format: {fmt!r}")


def emit_json(obj, path) -> None:
    """Write a JSON document with sorted keys and 9-significant-digit floats."""
    with open(Path(path), "w") as fh:
        json.dump(_round_floats(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def render_evaluate_figure(report, path) -> None:
    """Coverage histogram and per-trial set sizes for an evaluation report."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    coverages = [t.coverage for t in report.trials]
    sizes = [t.avg_set_size for t in report.trials]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.hist(coverages, bins=30, color="#2b6cb0")
    ax1.axvline(report.summary["coverage"]["mean"], color="k", linestyle="--")
    ax1.set_xlabel("empirical coverage")
    ax1.set_ylabel("trials")
    ax2.plot(sizes, ".", markersize=3, color="#c05621")
    ax2.axhline(report.summary["avg_set_size"]["mean"], color="k", linestyle="--")
    ax2.set_xlabel("trial")
    ax2.set_ylabel("average set size")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_certify_figure(rows: list[dict], path) -> None:
    """Certified lower/upper bound curves over the evaluated p grid."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ps = [row["p"] for row in rows]
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.plot(ps, [row["cert_lower"] for row in rows], label="certified lower")
    ax.plot(ps, [row["cert_upper"] for row in rows], label="certified upper")
    ax.plot(ps, ps, "k--", linewidth=0.8, label="identity")
    ax.set_xlabel("clean pass probability p")
    ax.set_ylabel("certified bound")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_intervals_figure(rows: list[dict], path) -> None:
    """Heatmap of the probability that Hoeffding beats Clopper-Pearson."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    ms = sorted({row["m"] for row in rows})
    taus = sorted({row["tau"] for row in rows})
    grid = np.full((len(taus), len(ms)), np.nan)
    for row in rows:
        grid[taus.index(row["tau"]), ms.index(row["m"])] = row["prob_hoeffding_tighter"]
    fig, ax = plt.subplots(figsize=(5, 3.8))
    im = ax.imshow(
        grid,
        aspect="auto",
        origin="lower",
        extent=(min(ms), max(ms), min(taus), max(taus)),
        vmin=0.0,
        vmax=max(0.25, float(np.nanmax(grid))),
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax, label="Pr[Hoeffding tighter]")
    ax.set_xlabel("samples m")
    ax.set_ylabel("binarization threshold tau")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
