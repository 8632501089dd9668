"""Passive input weights and the laser's steady-state response to optical injection.

The input image is carried through a multimode fibre whose complex random
transmission matrix implements fixed input weights.  The transmitted field is
injected into a broad-area laser modelled as a static nonlinear map: the field
is spatially mixed (a local Gaussian coupling from carrier diffusion plus a
global unitary coupling from intracavity diffraction), converted to intensity,
saturably compressed, blended with the free-running emission profile according
to the locking efficiency, and read out as non-negative detector powers with
additive Gaussian noise.  A static map is adequate because inputs are held for
durations far above the device's intrinsic time scales, so every sample sees a
settled state.

Reference device constants (for converting model ratios into lab units):
threshold current 20 mA, free-running output 3.6 mW at 1.5x threshold, and an
injection resonance at 918.9 nm.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace as dataclass_replace

import numpy as np

from .metrics import StateCollectMatrix
from .seeding import subseed

RESONANCE_WAVELENGTH_NM = 918.9
THRESHOLD_CURRENT_MA = 20.0
FREE_RUNNING_POWER_MW = 3.6

#: effective power ratio floor used when evaluating the locking width at PR ~ 0
POWER_RATIO_FLOOR = 1e-6


def bias_current_ma(bias_ratio: float) -> float:
    """Convert a bias ratio (I / I_threshold) to milliamps."""
    return bias_ratio * THRESHOLD_CURRENT_MA


def injection_wavelength_nm(delta_lambda_nm: float) -> float:
    """Absolute drive wavelength for a detuning relative to the resonance."""
    return RESONANCE_WAVELENGTH_NM + delta_lambda_nm


@dataclass(frozen=True)
class TransmissionMatrix:
    """Fixed complex random input weights of shape (sites, pixels)."""

    entries: np.ndarray
    seed: int

    @property
    def sites(self) -> int:
        return self.entries.shape[0]

    @property
    def pixels(self) -> int:
        return self.entries.shape[1]


def build_transmission_matrix(sites: int, pixels: int, seed: int) -> TransmissionMatrix:
    """I.i.d. circularly symmetric complex Gaussian entries with variance 1/pixels."""
    if sites < 1 or pixels < 1:
        raise ValueError("sites and pixels must be >= 1")
    rng = np.random.default_rng(seed)
    scale = math.sqrt(0.5 / pixels)
    entries = scale * (
        rng.standard_normal((sites, pixels)) + 1j * rng.standard_normal((sites, pixels))
    )
    entries.setflags(write=False)
    return TransmissionMatrix(entries=entries, seed=int(seed))


def inject(matrix, u, power_ratio: float) -> np.ndarray:
    """Transmit a Boolean pattern and scale the field to the injected power.

    The returned field a = s * (W u) satisfies sum |a_i|^2 = power_ratio (the
    free-running laser power is the power unit); the zero pattern returns the
    zero field.
    """
    if power_ratio < 0:
        raise ValueError(f"power_ratio must be >= 0, got {power_ratio}")
    entries = matrix.entries if isinstance(matrix, TransmissionMatrix) else np.asarray(matrix)
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (entries.shape[1],):
        raise ValueError(
            f"pattern length {u.shape} does not match weight columns {entries.shape[1]}"
        )
    field = entries @ u
    power = float(np.vdot(field, field).real)
    if power == 0.0 or power_ratio == 0.0:
        return np.zeros(entries.shape[0], dtype=complex)
    return field * math.sqrt(power_ratio / power)


def locking_efficiency(
    delta_lambda_nm: float, power_ratio: float, lock_width_nm: float
) -> float:
    """Fraction of the emission pulled to the drive: a Lorentzian in detuning.

    The half-width grows with the square root of the injected power, so
    stronger injection locks over a wider wavelength span.
    """
    if lock_width_nm <= 0:
        raise ValueError(f"lock_width_nm must be > 0, got {lock_width_nm}")
    width = lock_width_nm * math.sqrt(max(power_ratio, POWER_RATIO_FLOOR))
    return 1.0 / (1.0 + (delta_lambda_nm / width) ** 2)


@dataclass(frozen=True)
class ReservoirParams:
    """Physical knobs and model constants of the simulated laser reservoir.

    ``sat_scale`` and ``noise_scale`` are expressed in the same power units as
    the injected field (total injected power = power_ratio), where a typical
    single-site intensity is of order power_ratio / sites.
    """

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
    seed: int = 0

    def __post_init__(self):
        if self.bias_ratio <= 1.0:
            raise ValueError(f"bias_ratio must be > 1 (above threshold), got {self.bias_ratio}")
        if self.power_ratio < 0:
            raise ValueError(f"power_ratio must be >= 0, got {self.power_ratio}")
        if self.lock_width_nm <= 0:
            raise ValueError(f"lock_width_nm must be > 0, got {self.lock_width_nm}")
        if self.gain <= 0:
            raise ValueError(f"gain must be > 0, got {self.gain}")
        if self.sat_scale <= 0:
            raise ValueError(f"sat_scale must be > 0, got {self.sat_scale}")
        if self.noise_scale < 0:
            raise ValueError(f"noise_scale must be >= 0, got {self.noise_scale}")
        if not 0.0 <= self.mix_weight <= 1.0:
            raise ValueError(f"mix_weight must lie in [0, 1], got {self.mix_weight}")
        if self.diffusion_length_sites < 0:
            raise ValueError(
                f"diffusion_length_sites must be >= 0, got {self.diffusion_length_sites}"
            )
        side = math.isqrt(self.sites)
        if side * side != self.sites:
            raise ValueError(f"sites must be a perfect square, got {self.sites}")
        if not 1 <= self.nodes <= self.sites:
            raise ValueError(
                f"nodes must lie in [1, sites={self.sites}], got {self.nodes}"
            )

    @property
    def saturation_intensity(self) -> float:
        """Intensity knee of the response; lower (more nonlinear) at higher bias."""
        return self.sat_scale / (self.bias_ratio - 1.0)

    @property
    def noise_sigma(self) -> float:
        """Per-site noise level; spontaneous emission weakens with bias and locking."""
        return self.noise_scale / ((self.bias_ratio - 1.0) * (1.0 + self.power_ratio))


def _gaussian_kernel_fft(side: int, sigma_sites: float) -> np.ndarray:
    """FFT of a unit-sum periodic Gaussian kernel on the site grid."""
    if sigma_sites == 0.0:
        kernel = np.zeros((side, side))
        kernel[0, 0] = 1.0
    else:
        axis = np.minimum(np.arange(side), side - np.arange(side)).astype(np.float64)
        d2 = axis[:, None] ** 2 + axis[None, :] ** 2
        kernel = np.exp(-d2 / (2.0 * sigma_sites ** 2))
        kernel /= kernel.sum()
    return np.fft.fft2(kernel)


def random_unitary(size: int, seed: int) -> np.ndarray:
    """Haar-distributed complex unitary via QR with phase correction."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    return q


_UNITARY_CACHE: dict = {}
_TRANSMISSION_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()
_CACHE_LIMIT = 4


def _cached(cache: dict, key, builder):
    with _CACHE_LOCK:
        if key in cache:
            return cache[key]
    value = builder()
    with _CACHE_LOCK:
        if len(cache) >= _CACHE_LIMIT:
            cache.pop(next(iter(cache)))
        cache[key] = value
    return value


@dataclass(eq=False)
class CouplingOperator:
    """Power-preserving spatial mixing of the injected field.

    A convex blend of a local Gaussian blur (unit-sum kernel) and a global
    random unitary, rescaled per pattern so the output carries exactly the
    input power; with mix_weight = 1 the map is the unitary itself up to
    rounding.
    """

    side: int
    mix_weight: float
    kernel_fft: np.ndarray
    unitary: np.ndarray
    seed: int

    @classmethod
    def build(
        cls, sites: int, diffusion_length_sites: float, mix_weight: float, seed: int
    ) -> "CouplingOperator":
        side = math.isqrt(sites)
        if side * side != sites:
            raise ValueError(f"sites must be a perfect square, got {sites}")
        unitary = _cached(
            _UNITARY_CACHE, (sites, seed), lambda: random_unitary(sites, seed)
        )
        return cls(
            side=side,
            mix_weight=float(mix_weight),
            kernel_fft=_gaussian_kernel_fft(side, float(diffusion_length_sites)),
            unitary=unitary,
            seed=int(seed),
        )

    def apply(self, fields) -> np.ndarray:
        """Mix one field (m,) or a stack of fields (m, K)."""
        f = np.asarray(fields, dtype=complex)
        single = f.ndim == 1
        cols = f[:, None] if single else f
        k = cols.shape[1]
        imgs = cols.T.reshape(k, self.side, self.side)
        local = np.fft.ifft2(np.fft.fft2(imgs) * self.kernel_fft)
        local = local.reshape(k, -1).T
        mixed = (1.0 - self.mix_weight) * local + self.mix_weight * (self.unitary @ cols)
        p_in = np.sum(np.abs(cols) ** 2, axis=0)
        p_out = np.sum(np.abs(mixed) ** 2, axis=0)
        scale = np.sqrt(np.divide(p_in, p_out, out=np.zeros_like(p_in), where=p_out > 0))
        out = mixed * scale
        return out[:, 0] if single else out


def free_running_profile(sites: int, seed: int, modes: int = 4) -> np.ndarray:
    """Deterministic multi-lobed emission profile, total power normalized to 1.

    Superposition of a few low-order cavity-mode-like cosine profiles under a
    Gaussian aperture envelope, detected in intensity (hence non-negative).
    """
    side = math.isqrt(sites)
    if side * side != sites:
        raise ValueError(f"sites must be a perfect square, got {sites}")
    rng = np.random.default_rng(seed)
    coord = np.linspace(-1.0, 1.0, side)
    xx, yy = np.meshgrid(coord, coord)
    envelope = np.exp(-(xx ** 2 + yy ** 2) / (2 * 0.45 ** 2))
    orders = [(kx, ky) for kx in range(4) for ky in range(4)]
    picks = rng.choice(len(orders), size=min(modes, len(orders)), replace=False)
    field = np.zeros((side, side), dtype=complex)
    for idx in picks:
        kx, ky = orders[idx]
        coefficient = rng.standard_normal() + 1j * rng.standard_normal()
        field += coefficient * np.cos(np.pi * kx * xx / 2) * np.cos(np.pi * ky * yy / 2)
    profile = (np.abs(field) ** 2 * envelope).ravel()
    total = profile.sum()
    if total == 0.0:
        profile = np.full(sites, 1.0)
        total = float(sites)
    return profile / total


def node_layout(sites: int, nodes: int, seed: int) -> np.ndarray:
    """Fixed uniform spatial subsample of node sites; identity when nodes == sites."""
    if not 1 <= nodes <= sites:
        raise ValueError(f"nodes must lie in [1, sites={sites}], got {nodes}")
    if nodes == sites:
        return np.arange(sites)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(sites, size=nodes, replace=False))


@dataclass(eq=False)
class ReservoirState:
    """Detector-power readings of the sampled nodes for one input."""

    node_intensities: np.ndarray


def sample_nodes(site_intensities, nodes: int, layout_seed: int) -> ReservoirState:
    """Read out a fixed seed-determined subset of sites as the network nodes."""
    site_intensities = np.asarray(site_intensities, dtype=np.float64)
    layout = node_layout(site_intensities.size, nodes, layout_seed)
    return ReservoirState(node_intensities=site_intensities[layout])


def _structure_for(params: ReservoirParams):
    coupling = CouplingOperator.build(
        params.sites,
        params.diffusion_length_sites,
        params.mix_weight,
        subseed(params.seed, "mixing"),
    )
    free_pattern = free_running_profile(params.sites, subseed(params.seed, "free-running"))
    return coupling, free_pattern


def _as_rng(rng) -> np.random.Generator:
    if rng is None:
        raise ValueError("noise_scale > 0 requires an explicit noise stream")
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def vcsel_steady_state(
    injected_field,
    params: ReservoirParams,
    rng=None,
    *,
    coupling: CouplingOperator | None = None,
    free_pattern: np.ndarray | None = None,
) -> np.ndarray:
    """Per-site steady-state intensities for one injected field.

    The mixed field intensity q is saturably compressed, weighted by the
    locking efficiency, and blended with the free-running profile:

        x = eta * gain * q / (1 + q / I_sat) + (1 - eta) * f + noise,

    with I_sat = sat_scale / (bias_ratio - 1) and per-site Gaussian noise of
    scale noise_scale / ((bias_ratio - 1) * (1 + power_ratio)); negative
    post-noise intensities are clamped to zero (detectors read powers).
    """
    a = np.asarray(injected_field, dtype=complex)
    if a.shape != (params.sites,):
        raise ValueError(f"field length {a.shape} does not match sites {params.sites}")
    if not np.all(np.isfinite(a)):
        raise ValueError("injected field contains non-finite values")
    if coupling is None or free_pattern is None:
        built_coupling, built_pattern = _structure_for(params)
        coupling = coupling or built_coupling
        free_pattern = free_pattern if free_pattern is not None else built_pattern
    eta = locking_efficiency(params.delta_lambda_nm, params.power_ratio, params.lock_width_nm)
    q = np.abs(coupling.apply(a)) ** 2
    x = eta * params.gain * q / (1.0 + q / params.saturation_intensity)
    x = x + (1.0 - eta) * free_pattern
    sigma = params.noise_sigma
    if sigma > 0:
        x = x + _as_rng(rng).normal(0.0, sigma, x.shape)
    return np.maximum(x, 0.0)


class VcselSystem:
    """A configured simulator: encoder grid, input weights, laser model, node layout.

    Immutable after construction and safe to share across workers; every call
    that involves noise takes an explicit stream so parallel evaluations never
    share random state.
    """

    def __init__(self, grid=None, params: ReservoirParams | None = None, ring_fraction: float = 0.5):
        from .encoder import Grid  # local import keeps module load order simple

        self.grid = grid if grid is not None else Grid()
        self.params = params if params is not None else ReservoirParams()
        if not 0.0 <= ring_fraction <= 1.0:
            raise ValueError(f"ring_fraction must lie in [0, 1], got {ring_fraction}")
        self.ring_fraction = float(ring_fraction)

        p = self.grid.pixel_count
        pr = self.params
        self.transmission = _cached(
            _TRANSMISSION_CACHE,
            (pr.sites, p, subseed(pr.seed, "input-weights")),
            lambda: build_transmission_matrix(pr.sites, p, subseed(pr.seed, "input-weights")),
        )
        self.coupling, self.free_pattern = _structure_for(pr)
        self.node_indices = node_layout(pr.sites, pr.nodes, subseed(pr.seed, "nodes"))
        self.eta = locking_efficiency(pr.delta_lambda_nm, pr.power_ratio, pr.lock_width_nm)
        self._intensity_weights = None

    # -- basic properties ----------------------------------------------------

    @property
    def sites(self) -> int:
        return self.params.sites

    @property
    def nodes(self) -> int:
        return self.params.nodes

    @property
    def sigma(self) -> float:
        return self.params.noise_sigma

    def replace(self, **param_changes) -> "VcselSystem":
        """A new system sharing this one's grid, with some parameters changed."""
        return VcselSystem(
            grid=self.grid,
            params=dataclass_replace(self.params, **param_changes),
            ring_fraction=self.ring_fraction,
        )

    def provenance(self) -> dict:
        return {
            "params": repr(self.params),
            "grid": repr(self.grid),
            "ring_fraction": self.ring_fraction,
        }

    # -- deterministic response paths -----------------------------------------

    def _saturate(self, q: np.ndarray) -> np.ndarray:
        pr = self.params
        x = self.eta * pr.gain * q / (1.0 + q / pr.saturation_intensity)
        if self.eta < 1.0:
            free = self.free_pattern if q.ndim == 1 else self.free_pattern[:, None]
            x = x + (1.0 - self.eta) * free
        return x

    def site_drive(self, u, injection_scale: float | None = None) -> np.ndarray:
        """Pre-noise site intensities for one pattern vector.

        By default the field is normalized to the injected power per pattern;
        ``injection_scale`` overrides that with a fixed field multiplier, for
        diagnostics that must compare patterns under common illumination.
        """
        if injection_scale is None:
            a = inject(self.transmission, u, self.params.power_ratio)
        else:
            a = injection_scale * (self.transmission.entries @ np.asarray(u, dtype=np.float64))
        q = np.abs(self.coupling.apply(a)) ** 2
        return self._saturate(q)

    def injection_scale_for(self, u) -> float:
        """Field multiplier that would inject the configured power for pattern ``u``."""
        field = self.transmission.entries @ np.asarray(u, dtype=np.float64)
        power = float(np.vdot(field, field).real)
        if power == 0.0:
            return 0.0
        return math.sqrt(self.params.power_ratio / power)

    def site_response(self, u, rng=None) -> np.ndarray:
        """Site intensities for one pattern, including detection noise."""
        x = self.site_drive(u)
        sigma = self.sigma
        if sigma > 0:
            x = x + _as_rng(rng).normal(0.0, sigma, x.shape)
        return np.maximum(x, 0.0)

    def _class_drives(self, seq) -> tuple[np.ndarray, np.ndarray]:
        """Deterministic site drives per distinct class: (class index per step, (m, K))."""
        uniq, mat = seq.distinct_class_matrix()
        fields = self.transmission.entries @ mat                        # (m, K)
        power = np.sum(np.abs(fields) ** 2, axis=0)
        scale = np.sqrt(
            np.divide(
                self.params.power_ratio, power, out=np.zeros_like(power), where=power > 0
            )
        )
        mixed = self.coupling.apply(fields * scale)
        drives = self._saturate(np.abs(mixed) ** 2)                     # (m, K)
        inverse = np.searchsorted(uniq, seq.labels)
        return inverse, drives

    def node_drive(self, seq) -> np.ndarray:
        """Pre-noise node responses for a whole sequence, shape (T, n)."""
        inverse, drives = self._class_drives(seq)
        return drives[self.node_indices][:, inverse].T

    def respond(self, seq, rng=None) -> StateCollectMatrix:
        """State-collect matrix for a sequence: row t is the response to pattern t."""
        x = self.node_drive(seq)
        sigma = self.sigma
        if sigma > 0:
            x = np.maximum(x + _as_rng(rng).normal(0.0, sigma, x.shape), 0.0)
        return StateCollectMatrix(
            values=x,
            provenance={"sequence_seed": getattr(seq, "seed", None), **self.provenance()},
        )

    # -- diagnostic response paths ---------------------------------------------

    def passthrough_node_drive(self, seq) -> np.ndarray:
        """Node responses of the switched-off device: a passive scatterer.

        Intensities are |W u|^2 sampled at the nodes under a fixed scale chosen
        so the typical total power matches the injected power, keeping the
        noise level comparable with the switched-on response path.
        """
        uniq, mat = seq.distinct_class_matrix()
        fields = self.transmission.entries @ mat
        p = self.grid.pixel_count
        typical_on = p * (1.0 + self.ring_fraction) / 2.0
        kappa = self.params.power_ratio * p / (self.params.sites * max(typical_on, 1.0))
        drives = self.params.gain * kappa * np.abs(fields) ** 2
        inverse = np.searchsorted(uniq, seq.labels)
        return drives[self.node_indices][:, inverse].T

    def respond_passthrough(self, seq, rng=None) -> StateCollectMatrix:
        x = self.passthrough_node_drive(seq)
        sigma = self.sigma
        if sigma > 0:
            x = np.maximum(x + _as_rng(rng).normal(0.0, sigma, x.shape), 0.0)
        return StateCollectMatrix(
            values=x,
            provenance={
                "sequence_seed": getattr(seq, "seed", None),
                "mode": "passthrough",
                **self.provenance(),
            },
        )

    def site_response_linear(self, u) -> np.ndarray:
        """Diagnostic mode with a response exactly linear in the pattern.

        Incoherent transmission (intensities add pixel-wise), no mixing, no
        saturation, no background, no noise; superposition holds exactly.
        """
        if self._intensity_weights is None:
            self._intensity_weights = np.abs(self.transmission.entries) ** 2
        u = np.asarray(u, dtype=np.float64)
        scale = self.params.power_ratio / self.grid.pixel_count
        return self.params.gain * scale * (self._intensity_weights @ u)


def respond(seq, system: VcselSystem, rng=None) -> StateCollectMatrix:
    """Collect the system's responses to a labelled sequence (row per pattern)."""
    return system.respond(seq, rng=rng)
