"""Plot-ready exports: long-format CSV, a JSON manifest, and rendered figures.

The report path always produces three kinds of files side by side: a delimited
long-format table (one row per sweep row, columns = requested axes + metrics +
seed), a manifest describing axes and units, and PNG figures (one per metric)
so a sweep can be inspected without further tooling.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

AXIS_UNITS = {
    "delta_lambda_nm": "nm",
    "lock_width_nm": "nm",
    "power_ratio": "P_inj / P_free",
    "bias_ratio": "I / I_th",
    "ring_fraction": "area fraction",
    "n_bits": "bits",
    "mix_weight": "fraction",
    "diffusion_length_sites": "sites",
    "sat_scale": "power units",
    "noise_scale": "power units",
    "gain": "dimensionless",
    "sites": "count",
    "nodes": "count",
    "side_px": "px",
    "disk_radius_px": "px",
    "sequence_length": "steps",
    "test_length": "steps",
    "epochs": "count",
}

METRIC_COLUMNS = ("nmse", "ser", "c_total", "c_node_mean", "k_min", "k_min_off", "probe_d")


def _select_rows(rows: list[dict], axes: list[str]) -> list[dict]:
    """Rows whose axis names are covered by the requested axes, reshaped long."""
    selected = []
    for row in rows:
        if row.get("error"):
            continue
        row_axes = {row["axis"]: row["axis_value"]}
        if row.get("axis2"):
            row_axes[row["axis2"]] = row["axis2_value"]
        if not set(row_axes) <= set(axes):
            continue
        flat = {axis: row_axes.get(axis, "") for axis in axes}
        for metric in METRIC_COLUMNS:
            flat[metric] = row.get(metric, "")
        flat["seed"] = row["seed"]
        selected.append(flat)
    return selected


def emit_plotdata(
    rows: list[dict],
    axes,
    out_dir,
    stem: str = "plotdata",
    figure_label: str = "",
    render: bool = True,
) -> dict:
    """Write the long CSV, manifest, and figures for a result table.

    ``rows`` are result-table records (as read by ``sweep.read_rows``); ``axes``
    names the swept config fields to keep as columns.  Returns the manifest.
    """
    axes = list(axes)
    if not axes:
        raise ValueError("at least one axis is required")
    known_axes = {row["axis"] for row in rows} | {
        row["axis2"] for row in rows if row.get("axis2")
    }
    for axis in axes:
        if axis not in known_axes:
            raise ValueError(f"unknown axis {axis!r}; table has {sorted(known_axes)}")

    selected = _select_rows(rows, axes)
    if not selected:
        raise ValueError("empty selection: no rows match the requested axes")

    metrics = [m for m in METRIC_COLUMNS if any(r[m] for r in selected)]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    columns = axes + metrics + ["seed"]
    csv_path = out_dir / f"{stem}.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in selected:
            fh.write(",".join(str(row[c]) for c in columns) + "\n")

    figures = []
    if render:
        figures = render_figures(selected, axes, metrics, out_dir, stem)

    manifest = {
        "figure": figure_label,
        "axes": [{"name": a, "unit": AXIS_UNITS.get(a, "")} for a in axes],
        "metrics": metrics,
        "rows": len(selected),
        "table": csv_path.name,
        "figures": [f.name for f in figures],
    }
    manifest_path = out_dir / f"{stem}_manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def render_figures(selected, axes, metrics, out_dir, stem) -> list[Path]:
    """One PNG per metric: metric vs first axis, one series per second-axis value."""
    out_dir = Path(out_dir)
    primary = axes[0]
    series_axis = axes[1] if len(axes) > 1 else None
    paths = []
    for metric in metrics:
        points = [r for r in selected if r[metric] != "" and r[primary] != ""]
        if not points:
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        if series_axis:
            keys = sorted({r[series_axis] for r in points}, key=_sort_key)
        else:
            keys = [None]
        for key in keys:
            group = [r for r in points if key is None or r[series_axis] == key]
            pairs = sorted(
                ((float(r[primary]), float(r[metric])) for r in group),
                key=lambda pair: pair[0],
            )
            xs = [p[0] for p in pairs]
            ys = [p[1] for p in pairs]
            label = f"{series_axis}={key}" if key is not None and key != "" else None
            ax.plot(xs, ys, marker="o", label=label)
        unit = AXIS_UNITS.get(primary, "")
        ax.set_xlabel(f"{primary} [{unit}]" if unit else primary)
        ax.set_ylabel(metric)
        if series_axis and len(keys) > 1:
            ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out_dir / f"{stem}_{metric}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def _sort_key(value):
    try:
        return (0, float(value))
    except (TypeError, ValueError):
        return (1, str(value))


def save_heatmap(grid, path, title: str = "", xlabel: str = "", ylabel: str = "") -> Path:
    """Render a 2-D array as an image file (used for node maps and probe maps)."""
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    image = ax.imshow(grid, origin="lower", interpolation="nearest")
    fig.colorbar(image, ax=ax, shrink=0.85)
    if title:
        ax.set_title(title, fontsize=9)
    if xlabel:
        ax.set_xlabel(xlabel)
    if ylabel:
        ax.set_ylabel(ylabel)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_curves(curves: dict, path, xlabel: str, ylabel: str, logy: bool = False) -> Path:
    """Render labelled 1-D curves to a PNG."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for label, ys in curves.items():
        ax.plot(range(len(ys)), ys, label=str(label), linewidth=1.0)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(curves) > 1:
        ax.legend(fontsize=7, ncols=2)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
