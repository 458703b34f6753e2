"""Separation planning: elution arithmetic, separation probability,
UV-trace analysis, and model-backed condition ranking.

The condition-ranking entry point lives in :mod:`ccpred.sepplan.planner`
(imported explicitly by its users) because it pulls in the predictive
models; everything re-exported here is pure computation.
"""

from .elution import (
    SENTINEL,
    DegenerateTotalError,
    ElutionWindow,
    OrderError,
    QuantileTriple,
    SentinelInputError,
    SeparationAssessment,
    separation_probability,
    volumes_from_times,
)
from .trace import (
    INVALID_BOUNDS,
    PeakBounds,
    TooShortTraceError,
    TraceSignal,
    detect_peak_bounds,
    detection_threshold,
    gaussian_crossings,
    read_trace,
    synth_trace,
    write_trace,
)

__all__ = [
    "SENTINEL",
    "DegenerateTotalError",
    "ElutionWindow",
    "INVALID_BOUNDS",
    "OrderError",
    "PeakBounds",
    "QuantileTriple",
    "SentinelInputError",
    "SeparationAssessment",
    "TooShortTraceError",
    "TraceSignal",
    "detect_peak_bounds",
    "detection_threshold",
    "gaussian_crossings",
    "read_trace",
    "separation_probability",
    "synth_trace",
    "volumes_from_times",
    "write_trace",
]
