"""Evolutionary Boolean readout learning: flip mirrors, keep only improvements.

Each epoch flips a scheduled number of randomly chosen distinct mask bits,
re-evaluates the batch error of the detector trace against the target, and
keeps the change only if the error strictly decreased.  Strict inequality
avoids drifting along noise plateaus.  The flip count anneals geometrically so
early epochs explore and late epochs refine single mirrors.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .readout import BooleanMask, apply_normalization, classify, detect, nmse, normalize_trace, ser
from .seeding import subseed


@dataclass(frozen=True)
class FlipSchedule:
    """Geometrically annealed flip count: flips(k) = max(min, round(initial*decay^k))."""

    initial_flips: int
    decay: float = 0.995
    min_flips: int = 1

    def __post_init__(self):
        if self.initial_flips < 1:
            raise ValueError(f"initial_flips must be >= 1, got {self.initial_flips}")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")
        if self.min_flips < 1:
            raise ValueError(f"min_flips must be >= 1, got {self.min_flips}")

    def flips(self, epoch: int) -> int:
        return max(self.min_flips, round(self.initial_flips * self.decay ** epoch))

    @classmethod
    def default_for(cls, nodes: int) -> "FlipSchedule":
        return cls(initial_flips=max(1, nodes // 10))


@dataclass(eq=False)
class TrainRecord:
    """Outcome of training one Boolean mask against one target trace."""

    best_mask: BooleanMask
    error_curve: np.ndarray          # length epochs + 1; entry 0 is the initial error
    accepted_epochs: int
    seed: int
    offset: float                    # normalization fitted on the final accepted trace
    scale: float
    accepted: np.ndarray = dataclass_field(default=None)   # bool per epoch
    flips: np.ndarray = dataclass_field(default=None)      # flip count per epoch
    class_id: int | None = None


def _trace_error(raw: np.ndarray, y_target: np.ndarray):
    trace = normalize_trace(raw)
    return nmse(trace.values, y_target), trace


def train_mask(
    values,
    y_target,
    schedule: FlipSchedule,
    epochs: int,
    seed: int,
    remeasure=None,
) -> TrainRecord:
    """Greedy mask search on a response matrix.

    ``values`` is the T x n response matrix used for every epoch (frozen-matrix
    mode).  When ``remeasure`` is given it must be a callable
    ``remeasure(rng) -> T x n array`` producing a fresh noisy measurement; it
    is invoked once per epoch, mimicking in-hardware training where every
    error estimate rides on new noise.
    """
    values = np.asarray(getattr(values, "values", values), dtype=np.float64)
    y_target = np.asarray(y_target, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("response matrix must be T x n")
    if y_target.shape != (values.shape[0],):
        raise ValueError(
            f"target length {y_target.shape} does not match batch size {values.shape[0]}"
        )
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")

    n = values.shape[1]
    rng = np.random.default_rng(seed)
    noise_rng = np.random.default_rng(subseed(seed, "remeasure"))
    mask = rng.integers(0, 2, size=n).astype(bool)

    current = values
    raw = current @ mask.astype(np.float64)
    best_error, best_trace = _trace_error(raw, y_target)

    curve = np.empty(epochs + 1, dtype=np.float64)
    curve[0] = best_error
    accepted_flags = np.zeros(epochs, dtype=bool)
    flip_counts = np.zeros(epochs, dtype=np.intp)
    accepted_total = 0

    for k in range(epochs):
        n_flips = min(schedule.flips(k), n)
        flip_counts[k] = n_flips
        positions = rng.choice(n, size=n_flips, replace=False)
        if remeasure is not None:
            current = np.asarray(remeasure(noise_rng), dtype=np.float64)
            raw = current @ mask.astype(np.float64)
        # cheap screening via an incremental column update, then an exact
        # re-evaluation before committing so accumulated rounding never leaks
        # into the recorded errors
        signs = 1.0 - 2.0 * mask[positions].astype(np.float64)
        trial_raw = raw + current[:, positions] @ signs
        trial_error, _ = _trace_error(trial_raw, y_target)
        if trial_error < best_error:
            trial = mask.copy()
            trial[positions] = ~trial[positions]
            exact_raw = current @ trial.astype(np.float64)
            exact_error, exact_trace = _trace_error(exact_raw, y_target)
            if exact_error < best_error:
                mask = trial
                raw = exact_raw
                best_error = exact_error
                best_trace = exact_trace
                accepted_flags[k] = True
                accepted_total += 1
        curve[k + 1] = best_error

    return TrainRecord(
        best_mask=BooleanMask(bits=mask),
        error_curve=curve,
        accepted_epochs=accepted_total,
        seed=int(seed),
        offset=best_trace.offset,
        scale=best_trace.scale,
        accepted=accepted_flags,
        flips=flip_counts,
    )


def train_all_classes(
    system,
    seq_train,
    schedule: FlipSchedule | None = None,
    epochs: int = 2000,
    seed: int = 0,
    fresh_noise: bool = False,
) -> list[TrainRecord]:
    """Train one one-vs-all mask per class; responses are measured once and shared.

    With ``fresh_noise`` every epoch re-measures the response matrix with new
    noise (hardware-faithful, slower); otherwise a single frozen measurement is
    reused for the whole run.
    """
    if schedule is None:
        schedule = FlipSchedule.default_for(system.nodes)
    drive = system.node_drive(seq_train)
    sigma = system.sigma

    def frozen_matrix() -> np.ndarray:
        if sigma == 0:
            return drive
        rng = np.random.default_rng(subseed(seed, "train-noise"))
        return np.maximum(drive + rng.normal(0.0, sigma, drive.shape), 0.0)

    base = frozen_matrix()
    n_classes = 2 ** seq_train.n_bits
    records = []
    for class_id in range(n_classes):
        y_target = (seq_train.labels == class_id).astype(np.float64)
        remeasure = None
        if fresh_noise and sigma > 0:
            remeasure = lambda rng: np.maximum(  # noqa: E731
                drive + rng.normal(0.0, sigma, drive.shape), 0.0
            )
        record = train_mask(
            base,
            y_target,
            schedule,
            epochs,
            subseed(seed, "class", class_id),
            remeasure=remeasure,
        )
        record.class_id = class_id
        records.append(record)
    return records


def evaluate_matrix(records, values, labels) -> tuple[float, np.ndarray]:
    """Symbol error rate and per-class error of trained readouts on a response matrix."""
    values = np.asarray(getattr(values, "values", values), dtype=np.float64)
    labels = np.asarray(labels)
    outputs = np.empty((values.shape[0], len(records)), dtype=np.float64)
    per_class = np.empty(len(records), dtype=np.float64)
    for idx, record in enumerate(records):
        raw = detect(values, record.best_mask)
        y = apply_normalization(raw, record.offset, record.scale)
        outputs[:, idx] = y
        target = (labels == (record.class_id if record.class_id is not None else idx))
        per_class[idx] = nmse(y, target.astype(np.float64))
    predicted = classify(outputs)
    return ser(predicted, labels), per_class


def evaluate(records, system, seq_test, rng=None) -> tuple[float, np.ndarray]:
    """Classify fresh responses to a test sequence with stored normalizations."""
    if len(records) != 2 ** seq_test.n_bits:
        raise ValueError(
            f"got {len(records)} readouts for {2 ** seq_test.n_bits} classes"
        )
    response = system.respond(seq_test, rng=rng)
    return evaluate_matrix(records, response.values, seq_test.labels)
