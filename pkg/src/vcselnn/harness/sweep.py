"""Deterministic experiment orchestration: grids, seeding, result persistence.

Every sweep point is seeded from (master seed, point index, repetition), so a
single recorded seed reproduces any row in isolation and a full rerun of the
same config is byte-identical.  Rows stream into a journal as they complete
(partial results survive interruption); the final table is rewritten in point
order.  Wall-times are telemetry, not results, and live in a separate file so
result files stay reproducible.
"""

from __future__ import annotations

import csv
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from pathlib import Path

import numpy as np

from ..encoder import make_sequence
from ..metrics import consistency_report, dimensionality, dimensionality_off, nonlinearity_probe
from ..optics import VcselSystem
from ..seeding import subseed
from ..training import evaluate, train_all_classes
from .config import EXPERIMENTS, ExperimentConfig, cast_axis_value, serialize_config
from .recipes import Recipe, SweepBlock, get_recipe

RESULT_COLUMNS = (
    "point_index",
    "repetition",
    "axis",
    "axis_value",
    "axis2",
    "axis2_value",
    "experiment",
    "nmse",
    "ser",
    "c_total",
    "c_node_mean",
    "k_min",
    "k_min_off",
    "probe_d",
    "seed",
    "error",
)


@dataclass
class ResultRow:
    point_index: int
    repetition: int
    axis: str
    axis_value: object
    axis2: str
    axis2_value: object
    experiment: str
    seed: int
    nmse: float | None = None
    ser: float | None = None
    c_total: float | None = None
    c_node_mean: float | None = None
    k_min: int | None = None
    k_min_off: int | None = None
    probe_d: float | None = None
    error: str = ""
    wall_time_s: float = 0.0

    def as_record(self) -> dict:
        def fmt(v):
            return "" if v is None else (repr(float(v)) if isinstance(v, float) else str(v))

        return {
            "point_index": str(self.point_index),
            "repetition": str(self.repetition),
            "axis": self.axis,
            "axis_value": fmt(self.axis_value),
            "axis2": self.axis2,
            "axis2_value": fmt(self.axis2_value),
            "experiment": self.experiment,
            "nmse": fmt(self.nmse),
            "ser": fmt(self.ser),
            "c_total": fmt(self.c_total),
            "c_node_mean": fmt(self.c_node_mean),
            "k_min": fmt(self.k_min),
            "k_min_off": fmt(self.k_min_off),
            "probe_d": fmt(self.probe_d),
            "seed": str(self.seed),
            "error": self.error,
        }


def build_system(config: ExperimentConfig) -> VcselSystem:
    """System for a config; the device realization depends on the master seed only."""
    device_seed = subseed(config.master_seed, "device")
    return VcselSystem(
        grid=config.grid(),
        params=config.reservoir_params(seed=device_seed),
        ring_fraction=config.ring_fraction,
    )


def evaluate_point(config: ExperimentConfig, experiment: str, row_seed: int) -> dict:
    """Run one experiment at one parameter point; returns the metric fields."""
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}")
    system = build_system(config)
    out: dict = {}

    if experiment == "probe":
        _, score = nonlinearity_probe(system, n_bits=config.n_bits)
        out["probe_d"] = score
        return out

    seq = make_sequence(
        system.grid,
        config.n_bits,
        config.sequence_length,
        config.ring_fraction,
        subseed(row_seed, "sequence"),
    )

    if experiment == "train":
        records = train_all_classes(
            system,
            seq,
            schedule=config.flip_schedule(),
            epochs=config.epochs,
            seed=subseed(row_seed, "training"),
            fresh_noise=config.fresh_noise,
        )
        seq_test = make_sequence(
            system.grid,
            config.n_bits,
            config.test_length,
            config.ring_fraction,
            subseed(row_seed, "test-sequence"),
        )
        test_rng = np.random.default_rng(subseed(row_seed, "test-noise"))
        ser_value, per_class = evaluate(records, system, seq_test, rng=test_rng)
        out["ser"] = ser_value
        out["nmse"] = float(per_class.mean())
    elif experiment == "consistency":
        report = consistency_report(
            system,
            seq,
            repeats=config.consistency_reps,
            seed=subseed(row_seed, "consistency"),
        )
        out["c_total"] = report.c_total
        out["c_node_mean"] = float(report.c_node.mean())
    elif experiment == "dimensionality":
        on = system.respond(seq, rng=np.random.default_rng(subseed(row_seed, "noise-on")))
        out["k_min"] = dimensionality(on, center=config.center_covariance)
        out["k_min_off"] = dimensionality_off(
            system,
            seq,
            rng=np.random.default_rng(subseed(row_seed, "noise-off")),
            center=config.center_covariance,
        )
    return out


def _sweep_tasks(config: ExperimentConfig, blocks) -> list:
    """Flatten sweep blocks into (point_index, overrides, axis labels) tasks."""
    tasks = []
    index = 0
    for block in blocks:
        values2 = block.values2 if block.axis2 else (None,)
        for value, value2 in product(block.values, values2):
            overrides = {block.axis: cast_axis_value(block.axis, value)}
            labels = {
                "axis": block.axis,
                "axis_value": cast_axis_value(block.axis, value),
                "axis2": block.axis2,
                "axis2_value": None,
            }
            if block.axis2:
                overrides[block.axis2] = cast_axis_value(block.axis2, value2)
                labels["axis2_value"] = cast_axis_value(block.axis2, value2)
            tasks.append((index, overrides, labels))
            index += 1
    return tasks


def run_sweep(
    config: ExperimentConfig,
    experiment: str | None = None,
    blocks=None,
    out_dir=None,
    name: str = "custom",
    figure_label: str = "",
    workers: int | None = None,
    repetitions: int | None = None,
    progress=None,
) -> list[ResultRow]:
    """Evaluate an experiment over a parameter grid and persist the results.

    Per-point failures are captured in the row's error column and the sweep
    continues.  Returns the rows sorted by (point index, repetition).
    """
    experiment = experiment or config.experiment
    if blocks is None:
        if not config.axis:
            raise ValueError("no sweep axis: set [sweep] axis/values or pass blocks")
        blocks = (
            SweepBlock(
                axis=config.axis,
                values=config.values,
                axis2=config.axis2,
                values2=config.values2,
            ),
        )
    workers = workers or config.workers
    repetitions = repetitions or config.repetitions
    tasks = _sweep_tasks(config, blocks)

    out_dir = Path(out_dir if out_dir is not None else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{name}_{experiment}" if name == "custom" else name
    journal_path = out_dir / f"{stem}_rows.partial.csv"
    journal_lock = threading.Lock()

    with open(journal_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()

    def run_one(task, repetition: int) -> ResultRow:
        index, overrides, labels = task
        row_seed = subseed(config.master_seed, index, repetition)
        row = ResultRow(
            point_index=index,
            repetition=repetition,
            axis=labels["axis"],
            axis_value=labels["axis_value"],
            axis2=labels["axis2"],
            axis2_value=labels["axis2_value"],
            experiment=experiment,
            seed=row_seed,
        )
        started = time.perf_counter()
        try:
            point_config = replace(config, **overrides)
            for key, value in evaluate_point(point_config, experiment, row_seed).items():
                setattr(row, key, value)
        except Exception as exc:  # noqa: BLE001 - failures become row data
            row.error = f"{type(exc).__name__}: {exc}"
        row.wall_time_s = time.perf_counter() - started
        with journal_lock:
            with open(journal_path, "a", newline="", encoding="utf-8") as fh:
                csv.DictWriter(fh, fieldnames=RESULT_COLUMNS).writerow(row.as_record())
        if progress is not None:
            progress(row)
        return row

    jobs = [(task, rep) for task in tasks for rep in range(repetitions)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda job: run_one(*job), jobs))
    else:
        rows = [run_one(*job) for job in jobs]

    rows.sort(key=lambda r: (r.point_index, r.repetition))
    write_rows(rows, out_dir / f"{stem}_results.csv")
    _write_timing(rows, out_dir / f"{stem}_timing.csv")
    manifest = {
        "name": name,
        "experiment": experiment,
        "figure": figure_label,
        "rows": len(rows),
        "axes": sorted({b.axis for b in blocks} | {b.axis2 for b in blocks if b.axis2}),
        "master_seed": config.master_seed,
        "repetitions": repetitions,
        "config": serialize_config(config),
    }
    (out_dir / f"{stem}_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    journal_path.unlink(missing_ok=True)
    return rows


def run_recipe(
    recipe: Recipe | str,
    config: ExperimentConfig,
    out_dir=None,
    workers: int | None = None,
    repetitions: int | None = None,
    progress=None,
) -> list[ResultRow]:
    if isinstance(recipe, str):
        recipe = get_recipe(recipe)
    return run_sweep(
        config,
        experiment=recipe.experiment,
        blocks=recipe.blocks,
        out_dir=out_dir,
        name=recipe.name,
        figure_label=recipe.figure_label,
        workers=workers,
        repetitions=repetitions,
        progress=progress,
    )


def write_rows(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_record())


def _write_timing(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_index", "repetition", "wall_time_s"])
        for row in rows:
            writer.writerow([row.point_index, row.repetition, f"{row.wall_time_s:.6f}"])


def read_rows(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
