"""Flat key=value experiment configuration with sections, schema-checked.

The file format is line-based: ``[section]`` headers, ``key = value`` pairs,
``#`` comments and blank lines.  Unknown sections or keys are rejected with
the offending line number; every value is validated against its field's
domain.  An empty file yields the documented defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dataclass_fields, replace
from pathlib import Path

from ..encoder import Grid
from ..optics import ReservoirParams
from ..training import FlipSchedule


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


EXPERIMENTS = ("train", "consistency", "dimensionality", "probe")


@dataclass(frozen=True)
class ExperimentConfig:
    # [reservoir]
    bias_ratio: float = 1.5
    power_ratio: float = 1.0
    delta_lambda_nm: float = 0.0
    lock_width_nm: float = 0.15
    gain: float = 1.0
    sat_scale: float = 3e-4
    noise_scale: float = 5e-6
    mix_weight: float = 0.5
    diffusion_length_sites: float = 2.0
    sites: int = 1024
    nodes: int = 350
    # [encoder]
    side_px: int = 64
    disk_radius_px: float = 30.0
    n_bits: int = 3
    ring_fraction: float = 0.5
    sequence_length: int = 1000
    test_length: int = 500
    # [training]
    epochs: int = 2000
    initial_flips: int = 0          # 0 selects the automatic default: max(1, nodes // 10)
    flip_decay: float = 0.995
    min_flips: int = 1
    fresh_noise: bool = False
    # [metrics]
    consistency_reps: int = 8
    center_covariance: bool = True
    # [run]
    master_seed: int = 0
    repetitions: int = 1
    workers: int = 1
    output_dir: str = "results"
    # [sweep]
    experiment: str = "train"
    axis: str = ""
    values: tuple = ()
    axis2: str = ""
    values2: tuple = ()

    # -- derived objects -------------------------------------------------------

    def grid(self) -> Grid:
        return Grid(side_px=self.side_px, disk_radius_px=self.disk_radius_px)

    def reservoir_params(self, seed: int) -> ReservoirParams:
        return ReservoirParams(
            bias_ratio=self.bias_ratio,
            power_ratio=self.power_ratio,
            delta_lambda_nm=self.delta_lambda_nm,
            lock_width_nm=self.lock_width_nm,
            gain=self.gain,
            sat_scale=self.sat_scale,
            noise_scale=self.noise_scale,
            mix_weight=self.mix_weight,
            diffusion_length_sites=self.diffusion_length_sites,
            sites=self.sites,
            nodes=self.nodes,
            seed=seed,
        )

    def flip_schedule(self) -> FlipSchedule:
        initial = self.initial_flips if self.initial_flips > 0 else max(1, self.nodes // 10)
        return FlipSchedule(
            initial_flips=initial, decay=self.flip_decay, min_flips=self.min_flips
        )


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_values(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v.strip()) for v in text.split(","))


def _identity(text: str) -> str:
    return text.strip()


# (section, key) -> (parser, validator or None); validators raise on bad domain
def _positive(name):
    def check(v):
        if v <= 0:
            raise ValueError(f"{name} must be > 0, got {v}")
    return check


def _non_negative(name):
    def check(v):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    return check


def _in_unit_interval(name):
    def check(v):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return check


def _above_one(name):
    def check(v):
        if v <= 1.0:
            raise ValueError(f"{name} must be > 1, got {v}")
    return check


def _at_least(name, minimum):
    def check(v):
        if v < minimum:
            raise ValueError(f"{name} must be >= {minimum}, got {v}")
    return check


def _experiment_name(name):
    def check(v):
        if v not in EXPERIMENTS:
            raise ValueError(f"{name} must be one of {EXPERIMENTS}, got {v!r}")
    return check


SCHEMA: dict[tuple[str, str], tuple] = {
    ("reservoir", "bias_ratio"): (float, _above_one("bias_ratio")),
    ("reservoir", "power_ratio"): (float, _non_negative("power_ratio")),
    ("reservoir", "delta_lambda_nm"): (float, None),
    ("reservoir", "lock_width_nm"): (float, _positive("lock_width_nm")),
    ("reservoir", "gain"): (float, _positive("gain")),
    ("reservoir", "sat_scale"): (float, _positive("sat_scale")),
    ("reservoir", "noise_scale"): (float, _non_negative("noise_scale")),
    ("reservoir", "mix_weight"): (float, _in_unit_interval("mix_weight")),
    ("reservoir", "diffusion_length_sites"): (float, _non_negative("diffusion_length_sites")),
    ("reservoir", "sites"): (int, _at_least("sites", 1)),
    ("reservoir", "nodes"): (int, _at_least("nodes", 1)),
    ("encoder", "side_px"): (int, _at_least("side_px", 1)),
    ("encoder", "disk_radius_px"): (float, _positive("disk_radius_px")),
    ("encoder", "n_bits"): (int, _at_least("n_bits", 1)),
    ("encoder", "ring_fraction"): (float, _in_unit_interval("ring_fraction")),
    ("encoder", "sequence_length"): (int, _at_least("sequence_length", 1)),
    ("encoder", "test_length"): (int, _at_least("test_length", 1)),
    ("training", "epochs"): (int, _at_least("epochs", 1)),
    ("training", "initial_flips"): (int, _non_negative("initial_flips")),
    ("training", "flip_decay"): (float, _positive("flip_decay")),
    ("training", "min_flips"): (int, _at_least("min_flips", 1)),
    ("training", "fresh_noise"): (_parse_bool, None),
    ("metrics", "consistency_reps"): (int, _at_least("consistency_reps", 2)),
    ("metrics", "center_covariance"): (_parse_bool, None),
    ("run", "master_seed"): (int, None),
    ("run", "repetitions"): (int, _at_least("repetitions", 1)),
    ("run", "workers"): (int, _at_least("workers", 1)),
    ("run", "output_dir"): (_identity, None),
    ("sweep", "experiment"): (_identity, _experiment_name("experiment")),
    ("sweep", "axis"): (_identity, None),
    ("sweep", "values"): (_parse_values, None),
    ("sweep", "axis2"): (_identity, None),
    ("sweep", "values2"): (_parse_values, None),
}

SECTIONS = ("reservoir", "encoder", "training", "metrics", "run", "sweep")

#: numeric fields a sweep may vary
SWEEPABLE_FIELDS = (
    "bias_ratio",
    "power_ratio",
    "delta_lambda_nm",
    "lock_width_nm",
    "gain",
    "sat_scale",
    "noise_scale",
    "mix_weight",
    "diffusion_length_sites",
    "sites",
    "nodes",
    "side_px",
    "disk_radius_px",
    "n_bits",
    "ring_fraction",
    "sequence_length",
    "test_length",
    "epochs",
)

_INT_FIELDS = {
    name
    for (_, name), (parser, _) in SCHEMA.items()
    if parser is int
}


def cast_axis_value(axis: str, value: float):
    """Coerce a sweep value to the axis field's type."""
    if axis in _INT_FIELDS:
        if float(value) != int(value):
            raise ConfigError(f"axis {axis} takes integer values, got {value}")
        return int(value)
    return float(value)


def _validated(config: ExperimentConfig) -> ExperimentConfig:
    for (_, key), (parser, validator) in SCHEMA.items():
        if validator is not None:
            try:
                validator(getattr(config, key))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
    if config.axis:
        if config.axis not in SWEEPABLE_FIELDS:
            raise ConfigError(f"unknown sweep axis {config.axis!r}")
        if not config.values:
            raise ConfigError(f"sweep axis {config.axis!r} has no values")
    if config.axis2:
        if config.axis2 not in SWEEPABLE_FIELDS:
            raise ConfigError(f"unknown sweep axis {config.axis2!r}")
        if not config.values2:
            raise ConfigError(f"sweep axis {config.axis2!r} has no values")
    # structural cross-checks mirrored from the domain objects, reported early
    if config.nodes > config.sites:
        raise ConfigError(f"nodes ({config.nodes}) cannot exceed sites ({config.sites})")
    if config.disk_radius_px > config.side_px / 2:
        raise ConfigError(
            f"disk_radius_px ({config.disk_radius_px}) cannot exceed side_px/2"
        )
    return config


def parse_config_text(text: str) -> ExperimentConfig:
    updates: dict = {}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        spec = SCHEMA.get((section, key))
        if spec is None:
            raise ConfigError(f"unknown key {key!r} in section [{section}]", lineno)
        parser, validator = spec
        try:
            parsed = parser(value.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
        if validator is not None:
            try:
                validator(parsed)
            except ValueError as exc:
                raise ConfigError(str(exc), lineno) from None
        updates[key] = parsed
    return _validated(replace(ExperimentConfig(), **updates))


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"))


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical text form; parsing it back yields an identical config."""
    by_section: dict[str, list[str]] = {s: [] for s in SECTIONS}
    for (section, key), (parser, _) in SCHEMA.items():
        value = getattr(config, key)
        if parser is _parse_values:
            text = ", ".join(repr(v) for v in value)
        elif parser is _parse_bool:
            text = "true" if value else "false"
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        by_section[section].append(f"{key} = {text}")
    chunks = []
    for section in SECTIONS:
        chunks.append(f"[{section}]")
        chunks.extend(by_section[section])
        chunks.append("")
    return "\n".join(chunks)


def config_field_names() -> tuple:
    return tuple(f.name for f in dataclass_fields(ExperimentConfig))
