"""Model-backed ranking of eluent conditions for a compound pair.

For each candidate condition, both compounds' quantile elution windows
are predicted with a trained checkpoint and scored with the separation
probability; candidates are ordered by probability (descending), then
by ethyl-acetate fraction (ascending: the weaker, cheaper eluent wins
ties), with a stable sort for full determinism.
"""

from __future__ import annotations

from dataclasses import dataclass

from .. import graphrep
from ..models.dualgraph import DualGraphQuantileModel
from .elution import ElutionWindow, QuantileTriple, SeparationAssessment, \
    separation_probability


@dataclass(frozen=True)
class CandidateCondition:
    """One experimental condition to evaluate."""

    column_spec: str
    pe_ea_ratio: str
    sample_mass_mg: float = 40.0
    loading_solvent: str = "DCM"
    loading_volume_ml: float = 1.0

    def features(self) -> graphrep.ExperimentalFeatures:
        return graphrep.ExperimentalFeatures.from_conditions(
            self.column_spec, self.pe_ea_ratio, self.sample_mass_mg,
            self.loading_solvent, self.loading_volume_ml)

    @property
    def ea_fraction(self) -> float:
        return graphrep.parse_eluent_ratio(self.pe_ea_ratio)[1]


@dataclass(frozen=True)
class RankedCondition:
    """A candidate with its assessment and both predicted windows."""

    condition: CandidateCondition
    assessment: SeparationAssessment
    window_a: ElutionWindow
    window_b: ElutionWindow


def predict_window(model: DualGraphQuantileModel, smiles: str,
                   condition: CandidateCondition,
                   compound_id: str | None = None) -> ElutionWindow:
    """Predict one compound's elution window under one condition."""
    prediction = model.predict_one(smiles, condition.features())
    return ElutionWindow(
        compound_id=compound_id or smiles,
        v_start=QuantileTriple(*prediction.v_start),
        v_end=QuantileTriple(*prediction.v_end),
    )


def rank_conditions(model: DualGraphQuantileModel, smiles_a: str,
                    smiles_b: str,
                    candidates: list[CandidateCondition],
                    ) -> list[RankedCondition]:
    """Score and order candidate conditions for separating a pair.

    Raises:
        ValueError: empty candidate list (prediction errors propagate).
    """
    if not candidates:
        raise ValueError("no candidate conditions to rank")
    ranked: list[RankedCondition] = []
    for condition in candidates:
        window_a = predict_window(model, smiles_a, condition, "A")
        window_b = predict_window(model, smiles_b, condition, "B")
        assessment = separation_probability(window_a, window_b)
        ranked.append(RankedCondition(condition, assessment, window_a,
                                      window_b))
    ranked.sort(key=lambda r: (-r.assessment.sp, r.condition.ea_fraction))
    return ranked
