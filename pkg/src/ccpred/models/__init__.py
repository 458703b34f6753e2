"""Predictive models: the dual-graph quantile network, the flat-feature
baseline, training/transfer procedures, and checkpointing."""

from .baseline import (
    BaselineConfig,
    BaselineModel,
    WidthMismatchError,
    baseline_feature_table,
    baseline_features,
    baseline_train,
)
from .checkpoint import (
    CorruptFileError,
    VersionMismatchError,
    load_checkpoint,
    save_checkpoint,
)
from .dualgraph import (
    CodebookMismatchError,
    DualGraphQuantileModel,
    ModelConfig,
    QuantilePrediction,
    batch_pairs,
    featurize,
    featurize_records,
)
from .training import (
    DivergenceDetectedError,
    EmptyDatasetError,
    fit,
    train,
    transfer,
)

__all__ = [
    "BaselineConfig",
    "BaselineModel",
    "CodebookMismatchError",
    "CorruptFileError",
    "DivergenceDetectedError",
    "DualGraphQuantileModel",
    "EmptyDatasetError",
    "ModelConfig",
    "QuantilePrediction",
    "VersionMismatchError",
    "WidthMismatchError",
    "baseline_feature_table",
    "baseline_features",
    "baseline_train",
    "batch_pairs",
    "featurize",
    "featurize_records",
    "fit",
    "load_checkpoint",
    "save_checkpoint",
    "train",
    "transfer",
]
