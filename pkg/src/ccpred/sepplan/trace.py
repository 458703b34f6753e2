"""UV-trace peak-bound detection and synthetic trace generation.

The detector estimates its baseline from the leading window of the
trace (first 5 % of samples, at least 20), then scans for the first run
of ``min_run`` consecutive samples above ``mean + k_sigma * sd``; that
sample marks the start time.  The end time is the first such run below
the threshold after the trace maximum.  On a noiseless trace the sd
term vanishes, so a small relative floor above the baseline keeps the
threshold strictly positive.  Traces that never cross report the -1
sentinel used for invalid data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elution import SENTINEL


class TooShortTraceError(ValueError):
    """Not enough samples for a baseline window plus a detectable peak."""


@dataclass(frozen=True)
class TraceSignal:
    """Absorbance series with its sampling period and pump flow rate."""

    sample_period_s: float
    absorbance: np.ndarray
    flow_ml_min: float

    def __post_init__(self):
        if self.sample_period_s <= 0:
            raise ValueError("sample period must be positive")
        if self.absorbance.ndim != 1 or self.absorbance.size < 2:
            raise ValueError("absorbance must be a series of >= 2 samples")
        if self.flow_ml_min <= 0:
            raise ValueError("flow rate must be positive")

    def times_min(self) -> np.ndarray:
        return np.arange(self.absorbance.size) * (self.sample_period_s / 60.0)


@dataclass(frozen=True)
class PeakBounds:
    """Detected start/end times in minutes; -1/-1 marks no detection."""

    t1_min: float
    t2_min: float
    valid: bool

    def __post_init__(self):
        if self.valid and not 0 <= self.t1_min < self.t2_min:
            raise ValueError("valid bounds need 0 <= t1 < t2")


INVALID_BOUNDS = PeakBounds(SENTINEL, SENTINEL, False)

# Relative floor on the detection threshold so noiseless traces are
# still detectable: threshold >= baseline + floor * (max - baseline).
THRESHOLD_FLOOR_FRACTION = 1e-3


def detection_threshold(trace: TraceSignal, k_sigma: float = 3.0) -> float:
    """Threshold the detector scans against (baseline stats + floor)."""
    n_base = baseline_window(trace)
    base = trace.absorbance[:n_base]
    mu = float(base.mean())
    sd = float(base.std())
    peak = float(trace.absorbance.max())
    floor = THRESHOLD_FLOOR_FRACTION * max(peak - mu, 0.0)
    return mu + max(k_sigma * sd, floor)


def baseline_window(trace: TraceSignal) -> int:
    return max(20, int(0.05 * trace.absorbance.size))


def detect_peak_bounds(trace: TraceSignal, k_sigma: float = 3.0,
                       min_run: int = 5) -> PeakBounds:
    """Locate the first peak's start and end times.

    Args:
        trace: the UV trace.
        k_sigma: threshold multiple of the baseline standard deviation.
        min_run: consecutive samples required on either side of a
            crossing.

    Raises:
        TooShortTraceError: fewer samples than baseline window plus two
            detection runs.
    """
    signal = trace.absorbance
    n = signal.size
    n_base = baseline_window(trace)
    if n < n_base + 2 * min_run:
        raise TooShortTraceError(
            f"{n} samples < baseline window {n_base} + 2 x run {min_run}")
    threshold = detection_threshold(trace, k_sigma)

    above = signal > threshold
    start = _first_run(above, min_run, 0)
    if start is None:
        return INVALID_BOUNDS
    peak_idx = start + int(np.argmax(signal[start:]))
    below = ~above
    end = _first_run(below, min_run, peak_idx)
    if end is None:
        return INVALID_BOUNDS
    period_min = trace.sample_period_s / 60.0
    return PeakBounds(start * period_min, end * period_min, True)


def _first_run(mask: np.ndarray, run: int, begin: int) -> int | None:
    """Index of the first position >= begin starting `run` True values."""
    window = mask[begin:]
    if window.size < run:
        return None
    counts = np.convolve(window.astype(np.int64), np.ones(run, dtype=np.int64),
                         mode="valid")
    hits = np.flatnonzero(counts == run)
    if hits.size == 0:
        return None
    return begin + int(hits[0])


def synth_trace(peaks: list[tuple[float, float, float]],
                baseline: float = 0.0, noise_sigma: float = 0.0,
                sample_period_s: float = 0.5, flow_ml_min: float = 10.0,
                duration_min: float | None = None,
                seed: int = 0) -> TraceSignal:
    """Gaussian peaks plus baseline plus seeded Gaussian noise.

    Args:
        peaks: (center_min, height, width_min) per peak; widths are the
            Gaussian sigma.
        duration_min: trace length; defaults to the last peak center
            plus eight widths (or 10 minutes with no peaks).
    """
    for _, _, width in peaks:
        if width <= 0:
            raise ValueError("peak widths must be positive")
    if duration_min is None:
        duration_min = max((c + 8.0 * w for c, _, w in peaks), default=10.0)
    times = np.arange(0.0, duration_min * 60.0, sample_period_s) / 60.0
    signal = np.full(times.size, float(baseline))
    for center, height, width in peaks:
        signal += height * np.exp(-0.5 * ((times - center) / width) ** 2)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        signal = signal + rng.normal(0.0, noise_sigma, size=times.size)
    return TraceSignal(sample_period_s, signal, flow_ml_min)


def gaussian_crossings(center_min: float, height: float, width_min: float,
                       threshold: float,
                       baseline: float = 0.0) -> tuple[float, float]:
    """Closed-form times where one Gaussian peak crosses a threshold."""
    excess = threshold - baseline
    if excess <= 0 or excess >= height:
        raise ValueError("threshold must lie strictly between baseline and apex")
    half = width_min * math.sqrt(2.0 * math.log(height / excess))
    return center_min - half, center_min + half


TRACE_HEADER = "# uv-trace v1"


def write_trace(path, trace: TraceSignal) -> None:
    """Two-column time/absorbance text with a self-describing header."""
    with open(path, "w") as handle:
        handle.write(f"{TRACE_HEADER}\n")
        handle.write(f"# sample_period_s = {trace.sample_period_s!r}\n")
        handle.write(f"# flow_ml_min = {trace.flow_ml_min!r}\n")
        handle.write("time_min,absorbance\n")
        for t, y in zip(trace.times_min(), trace.absorbance):
            handle.write(f"{t!r},{y!r}\n")


def read_trace(path) -> TraceSignal:
    """Inverse of :func:`write_trace`."""
    period = flow = None
    values: list[float] = []
    with open(path) as handle:
        first = handle.readline().strip()
        if first != TRACE_HEADER:
            raise ValueError(f"not a uv-trace file: first line {first!r}")
        for line in handle:
            line = line.strip()
            if line.startswith("#"):
                key, _, value = line.lstrip("# ").partition("=")
                key = key.strip()
                if key == "sample_period_s":
                    period = float(value)
                elif key == "flow_ml_min":
                    flow = float(value)
            elif line and not line.startswith("time_min"):
                values.append(float(line.split(",")[1]))
    if period is None or flow is None:
        raise ValueError("trace file is missing header fields")
    return TraceSignal(period, np.asarray(values), flow)
