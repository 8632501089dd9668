"""Boolean output layer: mirror-mask detection, normalization, error measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class BooleanMask:
    """Mirror configuration of the output plane: one bit per readout node."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 1:
            raise ValueError("mask bits must be one-dimensional")

    def __len__(self) -> int:
        return self.bits.size


@dataclass(eq=False)
class OutputTrace:
    """Normalized detector trace plus the affine map that produced it."""

    values: np.ndarray
    offset: float
    scale: float   # 0.0 marks a constant raw trace (values pinned at 0.5)


def detect(matrix, mask) -> np.ndarray:
    """Sum the node responses selected by the mask, one value per time step."""
    values = getattr(matrix, "values", matrix)
    values = np.asarray(values, dtype=np.float64)
    bits = mask.bits if isinstance(mask, BooleanMask) else np.asarray(mask, dtype=bool)
    if values.ndim != 2:
        raise ValueError("state matrix must be T x n")
    if bits.shape != (values.shape[1],):
        raise ValueError(
            f"mask length {bits.size} does not match node count {values.shape[1]}"
        )
    return values @ bits.astype(np.float64)


def normalize_trace(raw) -> OutputTrace:
    """Affinely map a raw trace onto [0, 1] using the batch min and max.

    A constant trace has no usable range and is mapped to all 0.5.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1 or raw.size < 1:
        raise ValueError("raw trace must be a non-empty vector")
    lo = float(raw.min())
    hi = float(raw.max())
    if hi == lo:
        return OutputTrace(values=np.full(raw.shape, 0.5), offset=lo, scale=0.0)
    scale = 1.0 / (hi - lo)
    return OutputTrace(values=(raw - lo) * scale, offset=lo, scale=scale)


def apply_normalization(raw, offset: float, scale: float) -> np.ndarray:
    """Re-apply a stored normalization to new raw data (no re-fitting)."""
    raw = np.asarray(raw, dtype=np.float64)
    if scale == 0.0:
        return np.full(raw.shape, 0.5)
    return (raw - offset) * scale


def nmse(y, y_target) -> float:
    """Batch mean squared error between a normalized output and its target."""
    y = np.asarray(y, dtype=np.float64)
    t = np.asarray(y_target, dtype=np.float64)
    if y.shape != t.shape or y.ndim != 1:
        raise ValueError(f"shape mismatch: {y.shape} vs {t.shape}")
    if y.size == 0:
        raise ValueError("empty traces have no error")
    d = y - t
    return float(d @ d) / y.size


def classify(per_class_outputs) -> np.ndarray:
    """Argmax over class outputs per time step; ties go to the lowest index."""
    out = np.asarray(per_class_outputs, dtype=np.float64)
    if out.ndim != 2 or out.shape[1] < 2:
        raise ValueError("per-class outputs must be T x C with C >= 2")
    return np.argmax(out, axis=1)


def ser(predicted, labels) -> float:
    """Fraction of misclassified time steps."""
    predicted = np.asarray(predicted)
    labels = np.asarray(labels)
    if predicted.shape != labels.shape:
        raise ValueError(f"shape mismatch: {predicted.shape} vs {labels.shape}")
    return float(np.mean(predicted != labels))
