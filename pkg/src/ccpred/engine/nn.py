"""Graph-network building blocks on top of the autodiff core.

The message-passing layer is a graph isomorphism convolution with edge
features: each incoming edge contributes ``relu(h_src + W_e @ e)``, the
sums are blended with the receiving node via a learnable ``(1 + eps)``
factor, and a two-layer MLP produces the updated embedding.  Pooling is
summation per graph id; losses are the pinball (quantile) loss and mean
squared error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    IndexVector,
    ShapeMismatchError,
    Tensor,
    as_index,
    maximum,
    segment_sum,
)


class TauOutOfRangeError(ValueError):
    """Quantile level outside the open interval (0, 1)."""


@dataclass
class ParameterSet:
    """Named trainable tensors plus the seed used to initialize them."""

    rng_seed: int
    tensors: dict[str, Tensor] = field(default_factory=dict)

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self.tensors:
            raise ValueError(f"duplicate parameter name {name!r}")
        tensor = Tensor(data, requires_grad=True)
        self.tensors[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def names(self) -> list[str]:
        return list(self.tensors)

    def zero_grad(self) -> None:
        for tensor in self.tensors.values():
            tensor.zero_grad()

    def clone_data(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.tensors.items()}

    def load_data(self, arrays: dict[str, np.ndarray]) -> None:
        for name, tensor in self.tensors.items():
            source = arrays[name]
            if source.shape != tensor.data.shape:
                raise ShapeMismatchError(
                    f"parameter {name!r}: stored {source.shape}, "
                    f"expected {tensor.data.shape}")
            tensor.data = source.astype(np.float64).copy()


def glorot_uniform(rng: np.random.Generator, fan_in: int,
                   fan_out: int, shape=None) -> np.ndarray:
    """Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    if shape is None:
        shape = (fan_in, fan_out)
    return rng.uniform(-bound, bound, size=shape)


@dataclass
class GinLayerParams:
    """Weights of one edge-aware GIN layer."""

    edge_proj: Tensor  # (edge_width, dim), no bias: messages are relu(h + We e)
    w1: Tensor         # (dim, hidden)
    b1: Tensor
    w2: Tensor         # (hidden, dim)
    b2: Tensor
    eps: Tensor        # scalar, learnable, initialized to 0


def init_gin_layer(params: ParameterSet, prefix: str, edge_width: int,
                   dim: int, rng: np.random.Generator) -> GinLayerParams:
    return GinLayerParams(
        edge_proj=params.add(f"{prefix}.edge_proj",
                             glorot_uniform(rng, edge_width, dim)),
        w1=params.add(f"{prefix}.w1", glorot_uniform(rng, dim, dim)),
        b1=params.add(f"{prefix}.b1", np.zeros(dim)),
        w2=params.add(f"{prefix}.w2", glorot_uniform(rng, dim, dim)),
        b2=params.add(f"{prefix}.b2", np.zeros(dim)),
        eps=params.add(f"{prefix}.eps", np.zeros(())),
    )


def gin_layer(node_feats: Tensor, edge_src, edge_dst,
              edge_feats: Tensor, params: GinLayerParams) -> Tensor:
    """One GIN update: h'_v = MLP((1 + eps) h_v + sum relu(h_u + We e)).

    ``edge_src``/``edge_dst`` are aligned integer vectors; messages flow
    src -> dst and are summed over incoming edges.  Nodes without
    incoming edges keep only their own (1 + eps)-scaled embedding.
    """
    n_nodes, dim = node_feats.shape
    edge_src = as_index(edge_src)
    edge_dst = as_index(edge_dst)
    if edge_src.size != edge_dst.size:
        raise ShapeMismatchError("edge_src and edge_dst differ in length")
    if edge_feats.shape[0] != edge_src.size:
        raise ShapeMismatchError(
            f"{edge_src.size} edges but {edge_feats.shape[0]} feature rows")
    if edge_feats.shape[0]:
        for ends in (edge_src, edge_dst):
            if int(ends.index.max()) >= n_nodes or int(ends.index.min()) < 0:
                raise ShapeMismatchError("edge index out of range")
        messages = (node_feats.gather_rows(edge_src)
                    + edge_feats @ params.edge_proj).relu()
        aggregated = segment_sum(messages, edge_dst, n_nodes)
        blended = node_feats * (params.eps + 1.0) + aggregated
    else:
        blended = node_feats * (params.eps + 1.0)
    hidden = (blended @ params.w1 + params.b1).relu()
    return hidden @ params.w2 + params.b2


def sum_pool(node_feats: Tensor, graph_ids, num_graphs: int) -> Tensor:
    """Row-wise sum per graph id; empty graphs pool to zero vectors."""
    graph_ids = as_index(graph_ids)
    if graph_ids.size and (graph_ids.index.min() < 0
                           or graph_ids.index.max() >= num_graphs):
        raise ShapeMismatchError("graph ids must be contiguous from 0")
    return segment_sum(node_feats, graph_ids, num_graphs)


def pinball_loss(pred: Tensor, target: Tensor, tau: float) -> Tensor:
    """Mean quantile loss: E[max(tau (y - p), (tau - 1)(y - p))]."""
    if not 0.0 < tau < 1.0:
        raise TauOutOfRangeError(f"tau must be in (0, 1), got {tau}")
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"pred {pred.shape} vs target {target.shape}")
    diff = target - pred
    return maximum(diff * tau, diff * (tau - 1.0)).mean()


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean squared error."""
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    return (diff * diff).mean()
