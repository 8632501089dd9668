"""Spatially multiplexed laser neural network: simulator, metrics, training, harness."""

__version__ = "0.1.0"

from . import encoder, harness, metrics, optics, readout, training
from .encoder import Grid, InputPattern, LabeledSequence, make_header_pattern, make_sequence, pattern_to_vector
from .metrics import (
    ConsistencyReport,
    EigenSpectrum,
    MetricsReport,
    StateCollectMatrix,
    consistency_per_node,
    consistency_report,
    consistency_total,
    correlation_matrix,
    covariance,
    dimensionality,
    dimensionality_off,
    eigen_spectrum,
    indicator_function,
    nonlinearity_probe,
)
from .optics import (
    CouplingOperator,
    ReservoirParams,
    ReservoirState,
    TransmissionMatrix,
    VcselSystem,
    build_transmission_matrix,
    inject,
    locking_efficiency,
    respond,
    sample_nodes,
    vcsel_steady_state,
)
from .readout import BooleanMask, OutputTrace, classify, detect, nmse, normalize_trace, ser
from .seeding import subseed
from .training import FlipSchedule, TrainRecord, evaluate, train_all_classes, train_mask
