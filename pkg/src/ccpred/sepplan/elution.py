"""Elution-volume arithmetic and the quantile separation probability.

Volumes follow from detection times and flow rate: the eluent consumed
when a compound first appears is flow x start time, and similarly for
full elution; the window width is their difference.

For two compounds the separation probability compares predicted
quantile windows.  With A the earlier eluter, the overlap candidate is
(A's end-volume 90th percentile) - (B's start-volume 10th percentile)
and the reference span is (B's start-volume 90th) - (A's end-volume
10th); the probability is 1 when the overlap candidate is nonpositive
and 1 - overlap/span otherwise, clamped into [0, 1] with a diagnostic
flag when heavy overlap would push it negative.
"""

from __future__ import annotations

from dataclasses import dataclass

SENTINEL = -1.0


class OrderError(ValueError):
    """End time is not strictly after start time."""


class SentinelInputError(ValueError):
    """Times carry the -1 invalid-data marker."""


class DegenerateTotalError(ValueError):
    """Quantile windows are mutually contained or inverted: the
    reference span is nonpositive while overlap is positive."""


def volumes_from_times(flow_ml_min: float, t1_min: float,
                       t2_min: float) -> tuple[float, float, float]:
    """Start volume, end volume and window width, in mL.

    Raises:
        SentinelInputError: either time is the -1 invalid marker.
        OrderError: ``t2 <= t1``.
        ValueError: nonpositive flow or negative times.
    """
    if t1_min == SENTINEL or t2_min == SENTINEL:
        raise SentinelInputError("times carry the -1 invalid-data marker")
    if flow_ml_min <= 0:
        raise ValueError(f"flow rate must be positive, got {flow_ml_min}")
    if t1_min < 0 or t2_min < 0:
        raise ValueError("times must be nonnegative")
    if t2_min <= t1_min:
        raise OrderError(f"t2 ({t2_min}) must exceed t1 ({t1_min})")
    v1 = flow_ml_min * t1_min
    v2 = flow_ml_min * t2_min
    return v1, v2, flow_ml_min * (t2_min - t1_min)


@dataclass(frozen=True)
class QuantileTriple:
    """A (10th, 50th, 90th) percentile triple, in mL."""

    q10: float
    q50: float
    q90: float

    def __post_init__(self):
        if not (self.q10 <= self.q50 <= self.q90):
            raise ValueError(
                f"quantiles must be monotone: {self.q10}, {self.q50}, {self.q90}")

    def shifted(self, offset: float) -> "QuantileTriple":
        return QuantileTriple(self.q10 + offset, self.q50 + offset,
                              self.q90 + offset)

    def scaled(self, factor: float) -> "QuantileTriple":
        return QuantileTriple(self.q10 * factor, self.q50 * factor,
                              self.q90 * factor)


@dataclass(frozen=True)
class ElutionWindow:
    """Predicted elution window of one compound under one condition."""

    compound_id: str
    v_start: QuantileTriple
    v_end: QuantileTriple

    def __post_init__(self):
        if self.v_start.q50 > self.v_end.q50:
            raise ValueError("median start volume exceeds median end volume")


@dataclass(frozen=True)
class SeparationAssessment:
    """Separation probability with its overlap diagnostics."""

    sp: float
    first_eluter: str
    overlap_ml: float
    total_ml: float
    clamped: bool


def separation_probability(a: ElutionWindow,
                           b: ElutionWindow) -> SeparationAssessment:
    """Probability that two compounds' elution windows are disjoint.

    The earlier eluter is the window with the smaller median start
    volume (ties: smaller median end volume, then compound id).

    Raises:
        DegenerateTotalError: windows mutually contained (nonpositive
            reference span with positive overlap).
    """
    first, second = sorted(
        (a, b),
        key=lambda w: (w.v_start.q50, w.v_end.q50, w.compound_id))
    overlap = first.v_end.q90 - second.v_start.q10
    total = second.v_start.q90 - first.v_end.q10
    if overlap <= 0:
        return SeparationAssessment(
            sp=1.0, first_eluter=first.compound_id,
            overlap_ml=overlap, total_ml=total, clamped=False)
    if total <= 0:
        raise DegenerateTotalError(
            f"reference span {total} is nonpositive with overlap {overlap}; "
            "windows are mutually contained or inverted")
    raw = 1.0 - overlap / total
    clamped = raw < 0.0 or raw > 1.0
    return SeparationAssessment(
        sp=min(1.0, max(0.0, raw)), first_eluter=first.compound_id,
        overlap_ml=overlap, total_ml=total, clamped=clamped)
