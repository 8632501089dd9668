"""Computational metrics: repetition consistency and noise-aware PCA dimensionality.

Both metrics operate on a state-collect matrix whose rows are time steps and
whose columns are individual node responses.  Dimensionality is estimated by
locating the minimum of a factor indicator statistic over the eigenvalue
spectrum of the column covariance, which separates principal components that
carry meaningful variance from those dominated by spectrally flat noise.
Consistency is the mean pairwise correlation of responses recorded under
repeated presentations of the same input sequence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .encoder import make_header_pattern, pattern_to_vector
from .seeding import subseed

#: eigenvalues below this fraction of the largest one are treated as exact zeros
EIGENVALUE_CLAMP_RATIO = 1e-12

#: tolerated relative asymmetry before a covariance input is rejected
SYMMETRY_TOLERANCE = 1e-8


@dataclass(eq=False)
class StateCollectMatrix:
    """T x n matrix of node responses over an input sequence."""

    values: np.ndarray
    provenance: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("state-collect matrix must be two-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("state-collect matrix contains non-finite entries")

    @property
    def t_samples(self) -> int:
        return self.values.shape[0]

    @property
    def node_count(self) -> int:
        return self.values.shape[1]


@dataclass(eq=False)
class EigenSpectrum:
    """Descending, non-negative eigenvalues of a covariance, with the T used."""

    eigenvalues: np.ndarray
    t_samples: int


@dataclass(eq=False)
class ConsistencyReport:
    """Mean pairwise correlations over repeated presentations."""

    repeats: int
    c_total: float
    c_node: np.ndarray
    zero_variance_nodes: np.ndarray
    total_matrix: np.ndarray | None = None
    node_matrices: np.ndarray | None = None


def _as_values(matrix) -> np.ndarray:
    values = getattr(matrix, "values", matrix)
    return np.asarray(values, dtype=np.float64)


def covariance(matrix, center: bool = True) -> np.ndarray:
    """Sample covariance of the columns, with the 1/(T-1) convention.

    ``center=False`` computes the raw second-moment matrix instead, for
    comparison runs where column means should be retained.
    """
    values = _as_values(matrix)
    if values.ndim != 2:
        raise ValueError("covariance input must be T x n")
    t = values.shape[0]
    if t < 2:
        raise ValueError(f"need at least 2 samples for a covariance, got {t}")
    data = values - values.mean(axis=0, keepdims=True) if center else values
    sigma = data.T @ data / (t - 1)
    return (sigma + sigma.T) / 2.0


def eigen_spectrum(sigma, t_samples: int) -> EigenSpectrum:
    """Eigenvalues of a symmetric covariance, descending, clamped at zero.

    The spectrum of a symmetric positive semidefinite matrix coincides with
    its singular values, so a symmetric eigendecomposition is used directly.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("covariance must be a square matrix")
    scale = max(1.0, float(np.abs(sigma).max(initial=0.0)))
    asym = float(np.abs(sigma - sigma.T).max(initial=0.0))
    if asym > SYMMETRY_TOLERANCE * scale:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    sym = (sigma + sigma.T) / 2.0
    eigenvalues = np.linalg.eigvalsh(sym)[::-1].copy()
    clamp = EIGENVALUE_CLAMP_RATIO * max(float(eigenvalues[0]), 0.0)
    eigenvalues[eigenvalues < clamp] = 0.0
    return EigenSpectrum(eigenvalues=eigenvalues, t_samples=int(t_samples))


def indicator_function(spectrum: EigenSpectrum) -> np.ndarray:
    """Factor indicator values I(k) for k = 1 .. n-1.

    I(k) = sqrt( sum_{i>k} eigenvalue_i / (T * (n - k)) ) / (n - k)^2

    The statistic is evaluated on the trailing eigenvalues only; k = n is
    excluded because the trailing pool is empty there.
    """
    lam = np.asarray(spectrum.eigenvalues, dtype=np.float64)
    n = lam.size
    if n < 2:
        raise ValueError("indicator needs at least 2 eigenvalues")
    t = int(spectrum.t_samples)
    if t < 1:
        raise ValueError("t_samples must be positive")
    tails = np.cumsum(lam[::-1])[::-1]          # tails[k] = sum_{i >= k} lam[i]
    k = np.arange(1, n)
    remaining = n - k
    return np.sqrt(tails[1:] / (t * remaining)) / remaining.astype(np.float64) ** 2


def dimensionality(matrix, t_samples: int | None = None, center: bool = True) -> int:
    """Number of principal components carrying meaningful variance.

    Returns the argmin of the factor indicator over k = 1 .. n-1, with ties
    broken toward the smallest k (exact zeros count as minima).
    """
    values = _as_values(matrix)
    if values.shape[1] < 2:
        raise ValueError("need at least 2 nodes for a dimensionality estimate")
    if t_samples is None:
        t_samples = values.shape[0]
    spectrum = eigen_spectrum(covariance(values, center=center), t_samples)
    indicator = indicator_function(spectrum)
    return int(np.argmin(indicator)) + 1


def correlation_matrix(traces) -> np.ndarray:
    """Pairwise Pearson correlations of R traces; diagonal fixed at 1.

    Traces with zero variance cannot be correlated; their off-diagonal entries
    are reported as 0 (see :func:`zero_variance_flags` for which they are).
    """
    traces = np.asarray(traces, dtype=np.float64)
    if traces.ndim != 2 or traces.shape[0] < 2:
        raise ValueError("need at least 2 traces of equal length")
    centred = traces - traces.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centred, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = centred / safe[:, None]
    corr = unit @ unit.T
    corr[norms == 0, :] = 0.0
    corr[:, norms == 0] = 0.0
    np.fill_diagonal(corr, 1.0)
    return corr


def zero_variance_flags(traces) -> np.ndarray:
    traces = np.asarray(traces, dtype=np.float64)
    centred = traces - traces.mean(axis=1, keepdims=True)
    return np.linalg.norm(centred, axis=1) == 0


def _upper_triangle_mean(corr: np.ndarray) -> float:
    r = corr.shape[0]
    iu = np.triu_indices(r, k=1)
    return float(corr[iu].mean())


def _repeated_responses(system, seq, repeats: int, seed: int) -> np.ndarray:
    """Stack (repeats, T, n) responses to the same sequence, independent noise."""
    if repeats < 2:
        raise ValueError(f"need at least 2 repetitions, got {repeats}")
    drive = system.node_drive(seq)
    sigma = system.sigma
    stack = np.empty((repeats,) + drive.shape, dtype=np.float64)
    for r in range(repeats):
        if sigma > 0:
            rng = np.random.default_rng(subseed(seed, "consistency-rep", r))
            stack[r] = np.maximum(drive + rng.normal(0.0, sigma, drive.shape), 0.0)
        else:
            stack[r] = drive
    return stack


def consistency_total(system, seq, repeats: int = 8, seed: int = 0) -> float:
    """Mean pairwise correlation of the all-mirrors-on detector trace."""
    stack = _repeated_responses(system, seq, repeats, seed)
    traces = stack.sum(axis=2)
    return _upper_triangle_mean(correlation_matrix(traces))


def consistency_per_node(system, seq, repeats: int = 8, seed: int = 0) -> np.ndarray:
    """Per-node mean pairwise correlation across repetitions."""
    return consistency_report(system, seq, repeats=repeats, seed=seed).c_node


def consistency_report(
    system,
    seq,
    repeats: int = 8,
    seed: int = 0,
    keep_matrices: bool = False,
) -> ConsistencyReport:
    """Total and node-resolved consistency from one set of repetitions."""
    stack = _repeated_responses(system, seq, repeats, seed)
    repeats_, t, n = stack.shape

    total_traces = stack.sum(axis=2)
    total_corr = correlation_matrix(total_traces)
    c_total = _upper_triangle_mean(total_corr)

    centred = stack - stack.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centred, axis=1)                      # (R, n)
    flags = np.any(norms == 0, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    unit = centred / safe[:, None, :]
    node_corr = np.einsum("rti,sti->rsi", unit, unit)            # (R, R, n)
    node_corr[:, :, flags] = 0.0
    iu = np.triu_indices(repeats_, k=1)
    c_node = node_corr[iu].mean(axis=0)
    c_node[flags] = 0.0

    return ConsistencyReport(
        repeats=repeats_,
        c_total=c_total,
        c_node=c_node,
        zero_variance_nodes=flags,
        total_matrix=total_corr if keep_matrices else None,
        node_matrices=node_corr if keep_matrices else None,
    )


def dimensionality_off(system, seq, rng=None, center: bool = True) -> int:
    """Dimensionality with the laser replaced by a passive linear scatterer.

    The node intensities are the squared magnitudes of the transmitted input
    field, with no mixing, no saturation and no free-running background; the
    detection-noise level of the configured system is retained so the on/off
    comparison isolates the nonlinear transformation.
    """
    response = system.respond_passthrough(seq, rng=rng)
    return dimensionality(response, center=center)


def nonlinearity_probe(system, n_bits: int = 3, linear: bool = False):
    """Superposition-deviation map of the single-bit headers, noise forced off.

    Sums the site responses to each one-hot header and compares against the
    response to the all-on header; the ring-only response is subtracted
    (n_bits - 1) times so the constant locking/background contribution, which
    appears in every term, cancels instead of being over-counted.  All probe
    patterns are injected at one common scale (the one that puts the all-on
    header at the configured power): equalizing each pattern's power would add
    a large bias-independent additivity error that masks the saturation
    nonlinearity the probe is meant to expose.  Returns the per-site deviation
    map and its mean normalized by the all-on response.  A map linear in the
    input pattern yields exactly zero.
    """
    if not 1 <= n_bits <= 16:
        raise ValueError(f"n_bits must be in [1, 16], got {n_bits}")

    def vector_for(class_id: int) -> np.ndarray:
        return pattern_to_vector(
            make_header_pattern(system.grid, n_bits, class_id, system.ring_fraction)
        )

    full_vector = vector_for(2 ** n_bits - 1)
    if linear:
        def site_response(u):
            return system.site_response_linear(u)
    else:
        scale = system.injection_scale_for(full_vector)

        def site_response(u):
            return system.site_drive(u, injection_scale=scale)

    singles = sum(site_response(vector_for(1 << j)) for j in range(n_bits))
    full = site_response(full_vector)
    background = site_response(vector_for(0))
    deviation = np.abs(singles - full - (n_bits - 1) * background)
    mean_full = float(full.mean())
    score = float(deviation.mean()) / mean_full if mean_full > 0 else 0.0
    return deviation, score


@dataclass(eq=False)
class MetricsReport:
    """JSON-serializable bundle of the computational metrics of one run."""

    k_min: int | None = None
    k_min_off: int | None = None
    eigenvalues: np.ndarray | None = None
    indicator_values: np.ndarray | None = None
    c_total: float | None = None
    c_node: np.ndarray | None = None
    d_probe: float | None = None
    provenance: dict = dataclass_field(default_factory=dict)

    def to_dict(self) -> dict:
        def listify(arr):
            return None if arr is None else [float(v) for v in np.asarray(arr).ravel()]

        return {
            "k_min": self.k_min,
            "k_min_off": self.k_min_off,
            "eigenvalues": listify(self.eigenvalues),
            "indicator_values": listify(self.indicator_values),
            "c_total": self.c_total,
            "c_node": listify(self.c_node),
            "D": self.d_probe,
            "provenance": self.provenance,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)
