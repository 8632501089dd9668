"""Command-line interface: training, metrics, sweeps and plot-data export.

Every command takes a config file (missing file fields fall back to documented
defaults), an optional master-seed override, and an output directory.  On
failure the process exits nonzero after printing a single JSON error object to
stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..encoder import make_sequence
from ..metrics import (
    MetricsReport,
    consistency_report,
    covariance,
    dimensionality_off,
    eigen_spectrum,
    indicator_function,
    nonlinearity_probe,
)
from ..seeding import subseed
from ..training import evaluate_matrix, train_all_classes
from .config import ExperimentConfig, parse_config
from .plotdata import emit_plotdata, save_curves, save_heatmap
from .recipes import RECIPES, get_recipe
from .sweep import build_system, read_rows, run_recipe, run_sweep


def _load_config(args) -> ExperimentConfig:
    config = parse_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "repetitions", None) is not None:
        overrides["repetitions"] = args.repetitions
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    return replace(config, **overrides) if overrides else config


def _out_dir(config: ExperimentConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _provenance(config: ExperimentConfig, system, seed: int) -> dict:
    return {
        "master_seed": config.master_seed,
        "row_seed": seed,
        "params": repr(system.params),
        "grid": repr(system.grid),
        "ring_fraction": system.ring_fraction,
    }


def cmd_train(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    system = build_system(config)
    seed = subseed(config.master_seed, "train", 0)

    seq_train = make_sequence(
        system.grid, config.n_bits, config.sequence_length, config.ring_fraction,
        subseed(seed, "sequence"),
    )
    records = train_all_classes(
        system,
        seq_train,
        schedule=config.flip_schedule(),
        epochs=config.epochs,
        seed=subseed(seed, "training"),
        fresh_noise=config.fresh_noise,
    )

    curves_path = out / "training_curves.csv"
    with open(curves_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "epoch", "epsilon", "accepted", "flips"])
        for record in records:
            writer.writerow([record.class_id, 0, repr(float(record.error_curve[0])), "", ""])
            for epoch in range(record.accepted.size):
                writer.writerow(
                    [
                        record.class_id,
                        epoch + 1,
                        repr(float(record.error_curve[epoch + 1])),
                        int(record.accepted[epoch]),
                        int(record.flips[epoch]),
                    ]
                )

    save_curves(
        {f"class {r.class_id}": r.error_curve for r in records},
        out / "training_curves.png",
        xlabel="epoch",
        ylabel="batch error",
        logy=True,
    )

    train_response = system.respond(
        seq_train,
        rng=np.random.default_rng(subseed(seed, "train-eval-noise"))
        if system.sigma > 0
        else None,
    )
    ser_train, _ = evaluate_matrix(records, train_response.values, seq_train.labels)
    seq_test = make_sequence(
        system.grid, config.n_bits, config.test_length, config.ring_fraction,
        subseed(seed, "test-sequence"),
    )
    test_response = system.respond(
        seq_test,
        rng=np.random.default_rng(subseed(seed, "test-noise")) if system.sigma > 0 else None,
    )
    ser_test, per_class = evaluate_matrix(records, test_response.values, seq_test.labels)

    report = {
        "final_epsilon": [float(r.error_curve[-1]) for r in records],
        "accepted_epochs": [r.accepted_epochs for r in records],
        "ser_train": ser_train,
        "ser_test": ser_test,
        "nmse_test_per_class": [float(v) for v in per_class],
        "nmse_test_mean": float(per_class.mean()),
        "epochs": config.epochs,
        "provenance": _provenance(config, system, seed),
    }
    _write_json(out / "train_report.json", report)
    print(f"train: SER(train)={ser_train:.4f} SER(test)={ser_test:.4f} -> {out}")
    return 0


def cmd_consistency(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    system = build_system(config)
    seed = subseed(config.master_seed, "consistency", 0)
    seq = make_sequence(
        system.grid, config.n_bits, config.sequence_length, config.ring_fraction,
        subseed(seed, "sequence"),
    )
    report = consistency_report(
        system, seq, repeats=config.consistency_reps, seed=subseed(seed, "noise")
    )
    payload = MetricsReport(
        c_total=report.c_total,
        c_node=report.c_node,
        provenance={
            **_provenance(config, system, seed),
            "repeats": report.repeats,
            "zero_variance_nodes": int(report.zero_variance_nodes.sum()),
        },
    ).to_dict()
    _write_json(out / "consistency_report.json", payload)

    side = int(np.sqrt(system.sites))
    node_map = np.full(system.sites, np.nan)
    node_map[system.node_indices] = report.c_node
    save_heatmap(
        node_map.reshape(side, side),
        out / "consistency_node_map.png",
        title="per-node consistency",
    )
    print(
        f"consistency: c_total={report.c_total:.6f} "
        f"mean c_node={float(report.c_node.mean()):.6f} -> {out}"
    )
    return 0


def cmd_dimensionality(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    system = build_system(config)
    seed = subseed(config.master_seed, "dimensionality", 0)
    seq = make_sequence(
        system.grid, config.n_bits, config.sequence_length, config.ring_fraction,
        subseed(seed, "sequence"),
    )
    on = system.respond(
        seq,
        rng=np.random.default_rng(subseed(seed, "noise-on")) if system.sigma > 0 else None,
    )
    spectrum = eigen_spectrum(
        covariance(on.values, center=config.center_covariance), on.t_samples
    )
    indicator = indicator_function(spectrum)
    k_min = int(np.argmin(indicator)) + 1
    k_off = dimensionality_off(
        system,
        seq,
        rng=np.random.default_rng(subseed(seed, "noise-off")) if system.sigma > 0 else None,
        center=config.center_covariance,
    )
    payload = MetricsReport(
        k_min=k_min,
        k_min_off=k_off,
        eigenvalues=spectrum.eigenvalues,
        indicator_values=indicator,
        provenance=_provenance(config, system, seed),
    ).to_dict()
    _write_json(out / "dimensionality_report.json", payload)

    save_curves(
        {"indicator": indicator},
        out / "dimensionality_indicator.png",
        xlabel="retained components k",
        ylabel="indicator value",
        logy=True,
    )
    print(f"dimensionality: k_min={k_min} k_min_off={k_off} -> {out}")
    return 0


def cmd_probe(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    system = build_system(config)
    seed = subseed(config.master_seed, "probe", 0)
    deviation, score = nonlinearity_probe(system, n_bits=config.n_bits)
    payload = MetricsReport(
        d_probe=score, provenance=_provenance(config, system, seed)
    ).to_dict()
    _write_json(out / "probe_report.json", payload)
    side = int(np.sqrt(system.sites))
    save_heatmap(
        deviation.reshape(side, side),
        out / "probe_deviation_map.png",
        title="superposition deviation per site",
    )
    print(f"probe: D={score:.6f} -> {out}")
    return 0


def cmd_sweep(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)

    def progress(row):
        status = row.error if row.error else "ok"
        print(f"point {row.point_index} rep {row.repetition}: {status}")

    if args.recipe == "custom":
        rows = run_sweep(config, out_dir=out, progress=progress)
        stem = f"custom_{config.experiment}"
    else:
        recipe = get_recipe(args.recipe)
        rows = run_recipe(recipe, config, out_dir=out, progress=progress)
        stem = recipe.name
    failures = sum(1 for r in rows if r.error)
    print(f"sweep {args.recipe}: {len(rows)} rows ({failures} failed) -> {out / (stem + '_results.csv')}")
    return 0 if failures == 0 else 1


def cmd_emit_plotdata(args) -> int:
    rows = read_rows(args.table)
    axes = [a.strip() for a in args.axes.split(",") if a.strip()]
    figure_label = args.figure
    if not figure_label:
        manifest_path = Path(args.table).with_name(
            Path(args.table).name.replace("_results.csv", "_manifest.json")
        )
        if manifest_path.is_file():
            meta = json.loads(manifest_path.read_text(encoding="utf-8"))
            name = meta.get("name", "")
            figure_label = meta.get("figure", "") or (
                RECIPES[name].figure_label if name in RECIPES else ""
            )
    out = Path(args.out) if args.out else Path(args.table).parent
    manifest = emit_plotdata(rows, axes, out, stem=args.stem, figure_label=figure_label)
    print(f"emit-plotdata: {manifest['rows']} rows, metrics {manifest['metrics']} -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vcselnn",
        description="Spatially multiplexed laser neural network: simulator, metrics, sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, sweep_flags: bool = False):
        p.add_argument("--config", type=str, default=None, help="config file path")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", type=str, default=None, help="output directory")
        if sweep_flags:
            p.add_argument("--workers", type=int, default=None, help="worker pool size")
            p.add_argument(
                "--repetitions", type=int, default=None, help="repetitions per sweep point"
            )

    p_train = sub.add_parser("train", help="train all class readouts at the config point")
    add_common(p_train)
    p_train.set_defaults(handler=cmd_train)

    p_sweep = sub.add_parser("sweep", help="run a named recipe or the config's custom sweep")
    p_sweep.add_argument(
        "recipe",
        choices=sorted(RECIPES) + ["custom"],
        help="recipe name, or 'custom' to use the [sweep] section",
    )
    add_common(p_sweep, sweep_flags=True)
    p_sweep.set_defaults(handler=cmd_sweep)

    p_cons = sub.add_parser("consistency", help="total and per-node consistency report")
    add_common(p_cons)
    p_cons.set_defaults(handler=cmd_consistency)

    p_dim = sub.add_parser("dimensionality", help="noise-aware PCA dimensionality report")
    add_common(p_dim)
    p_dim.set_defaults(handler=cmd_dimensionality)

    p_probe = sub.add_parser("probe", help="superposition-deviation nonlinearity probe")
    add_common(p_probe)
    p_probe.set_defaults(handler=cmd_probe)

    p_emit = sub.add_parser("emit-plotdata", help="long-format CSV + manifest + figures")
    p_emit.add_argument("--table", type=str, required=True, help="a *_results.csv file")
    p_emit.add_argument("--axes", type=str, required=True, help="comma-separated axis names")
    p_emit.add_argument("--out", type=str, default=None, help="output directory")
    p_emit.add_argument("--stem", type=str, default="plotdata", help="output file stem")
    p_emit.add_argument("--figure", type=str, default="", help="figure label override")
    p_emit.set_defaults(handler=cmd_emit_plotdata)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not crashes
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
