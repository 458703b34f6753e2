"""Minimal differentiable tensor engine used by the predictive models."""

from .autodiff import (
    GraphCycleError,
    IndexVector,
    ShapeMismatchError,
    Tensor,
    as_index,
    backward,
    concat_columns,
    maximum,
    segment_sum,
)
from .nn import (
    GinLayerParams,
    ParameterSet,
    TauOutOfRangeError,
    gin_layer,
    glorot_uniform,
    init_gin_layer,
    mse_loss,
    pinball_loss,
    sum_pool,
)
from .optim import AdamState, StepLR, adam_step

__all__ = [
    "AdamState",
    "GinLayerParams",
    "GraphCycleError",
    "IndexVector",
    "ParameterSet",
    "ShapeMismatchError",
    "StepLR",
    "Tensor",
    "TauOutOfRangeError",
    "adam_step",
    "as_index",
    "backward",
    "concat_columns",
    "gin_layer",
    "glorot_uniform",
    "init_gin_layer",
    "maximum",
    "mse_loss",
    "pinball_loss",
    "segment_sum",
    "sum_pool",
]
