"""Dual-graph message-passing model with quantile elution-volume heads.

Each of the stacked layers first runs a GIN update on the bond-angle
graph (refining per-bond embeddings from angles and molecular
descriptors), then a GIN update on the atom graph whose edge inputs are
the current embedding of the edge's bond concatenated with the static
bond attributes and experimental conditions.  Atom embeddings are
sum-pooled per molecule and a two-layer readout emits, for each of the
two volume targets, a median plus two softplus-positive offsets, so the
10th/50th/90th percentile ordering holds by construction.

Targets are trained in normalized space (zero mean, unit variance on
the training split); predictions are denormalized and floored at zero.
Feature columns are standardized with statistics captured at training
time and stored with the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .. import chemfeat, graphrep, molparse
from ..engine import (
    GinLayerParams,
    IndexVector,
    ParameterSet,
    Tensor,
    concat_columns,
    gin_layer,
    glorot_uniform,
    init_gin_layer,
    pinball_loss,
    sum_pool,
)

QUANTILES = (0.1, 0.5, 0.9)

# Positions of the column-info block inside the 15-wide atom-graph edge
# features (after the 3 bond attributes and 6 solvent values).
COLUMN_FEATURE_SLOTS = (9, 10, 11)


class CodebookMismatchError(ValueError):
    """Features were built under a different codebook version than the
    model was trained with."""


class SingleAtomMoleculeError(graphrep.SingleAtomMoleculeError):
    """Re-exported: single atoms cannot be represented."""


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters; defaults follow the reference training recipe."""

    num_layers: int = 5
    embed_dim: int = 128
    quantiles: tuple[float, ...] = QUANTILES
    batch_size: int = 2048
    max_epochs: int = 1500
    lr: float = 1e-3
    early_stop_patience: int = 50
    seed: int = 0
    lr_gamma: float = 1.0       # 1.0: constant learning rate
    lr_step_size: int = 100
    lr_floor: float = 1e-4
    # Volumes carry multiplicative error, so quantile regression runs on
    # log volumes by default; quantiles map back exactly through the
    # monotone transform.  "linear" trains on raw volumes.
    target_transform: str = "log"

    def __post_init__(self):
        if self.num_layers < 1 or self.embed_dim < 1:
            raise ValueError("layers and embedding dimension must be positive")
        if self.batch_size < 1 or self.max_epochs < 0:
            raise ValueError("batch size and epoch budget must be positive")
        quantiles = tuple(self.quantiles)
        if list(quantiles) != sorted(set(quantiles)) \
                or any(not 0 < q < 1 for q in quantiles):
            raise ValueError("quantiles must be strictly increasing in (0, 1)")
        if self.target_transform not in ("log", "linear"):
            raise ValueError("target_transform must be 'log' or 'linear'")

    def to_dict(self) -> dict:
        return {
            "num_layers": self.num_layers,
            "embed_dim": self.embed_dim,
            "quantiles": list(self.quantiles),
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "lr": self.lr,
            "early_stop_patience": self.early_stop_patience,
            "seed": self.seed,
            "lr_gamma": self.lr_gamma,
            "lr_step_size": self.lr_step_size,
            "lr_floor": self.lr_floor,
            "target_transform": self.target_transform,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelConfig":
        payload = dict(payload)
        payload["quantiles"] = tuple(payload.get("quantiles", QUANTILES))
        return cls(**payload)


@dataclass(frozen=True)
class QuantilePrediction:
    """Start/end elution volumes at the three quantiles, in mL."""

    v_start: tuple[float, float, float]
    v_end: tuple[float, float, float]

    def __post_init__(self):
        for triple in (self.v_start, self.v_end):
            if not (triple[0] <= triple[1] <= triple[2]):
                raise ValueError(f"quantiles out of order: {triple}")
            if triple[0] < 0:
                raise ValueError("volumes must be nonnegative")


@dataclass
class PairBatch:
    """Several dual-graph pairs packed into one disjoint graph.

    Index vectors carry cached scatter plans, so repeated forward and
    backward passes over one batch reuse their aggregation matrices.
    """

    atom_x: np.ndarray
    g_src: IndexVector
    g_dst: IndexVector
    g_edge: np.ndarray
    h_x: np.ndarray
    h_src: IndexVector
    h_dst: IndexVector
    h_edge: np.ndarray
    edge_bond: IndexVector
    graph_ids: IndexVector
    n_graphs: int
    codebook_version: str


def batch_pairs(pairs: list[graphrep.DualGraphPair]) -> PairBatch:
    """Concatenate pairs with index offsets into one batch."""
    versions = {p.codebook_version for p in pairs}
    if len(versions) != 1:
        raise CodebookMismatchError(
            f"mixed codebook versions in one batch: {sorted(versions)}")
    atom_offset = bond_offset = 0
    atom_x, g_src, g_dst, g_edge = [], [], [], []
    h_x, h_src, h_dst, h_edge = [], [], [], []
    edge_bond, graph_ids = [], []
    for gid, pair in enumerate(pairs):
        atoms = pair.atom_graph
        bonds = pair.angle_graph
        atom_x.append(atoms.node_features)
        g_src.append(atoms.edge_src + atom_offset)
        g_dst.append(atoms.edge_dst + atom_offset)
        g_edge.append(atoms.edge_features)
        h_x.append(bonds.node_features)
        h_src.append(bonds.edge_src + bond_offset)
        h_dst.append(bonds.edge_dst + bond_offset)
        h_edge.append(bonds.edge_features)
        edge_bond.append(pair.edge_bond_index + bond_offset)
        graph_ids.append(np.full(pair.n_atoms, gid, dtype=np.int64))
        atom_offset += pair.n_atoms
        bond_offset += pair.n_bonds
    return PairBatch(
        atom_x=np.concatenate(atom_x),
        g_src=IndexVector(np.concatenate(g_src)),
        g_dst=IndexVector(np.concatenate(g_dst)),
        g_edge=np.concatenate(g_edge),
        h_x=np.concatenate(h_x),
        h_src=IndexVector(np.concatenate(h_src)),
        h_dst=IndexVector(np.concatenate(h_dst)),
        h_edge=np.concatenate(h_edge),
        edge_bond=IndexVector(np.concatenate(edge_bond)),
        graph_ids=IndexVector(np.concatenate(graph_ids)),
        n_graphs=len(pairs),
        codebook_version=versions.pop(),
    )


@dataclass
class FeatureNormalizer:
    """Per-column standardization statistics for the four tensor groups."""

    atom_mean: np.ndarray
    atom_std: np.ndarray
    g_edge_mean: np.ndarray
    g_edge_std: np.ndarray
    h_x_mean: np.ndarray
    h_x_std: np.ndarray
    h_edge_mean: np.ndarray
    h_edge_std: np.ndarray

    @staticmethod
    def _stats(values: np.ndarray, width: int) -> tuple[np.ndarray, np.ndarray]:
        if values.shape[0] == 0:
            return np.zeros(width), np.ones(width)
        mean = values.mean(axis=0)
        std = values.std(axis=0)
        std[std < 1e-12] = 1.0
        return mean, std

    @classmethod
    def fit(cls, batch: PairBatch) -> "FeatureNormalizer":
        atom_mean, atom_std = cls._stats(batch.atom_x, graphrep.ATOM_NODE_WIDTH)
        ge_mean, ge_std = cls._stats(batch.g_edge, graphrep.ATOM_EDGE_WIDTH)
        hx_mean, hx_std = cls._stats(batch.h_x, graphrep.BOND_NODE_WIDTH)
        he_mean, he_std = cls._stats(batch.h_edge, graphrep.BOND_EDGE_WIDTH)
        return cls(atom_mean, atom_std, ge_mean, ge_std, hx_mean, hx_std,
                   he_mean, he_std)

    def apply(self, batch: PairBatch) -> "NormalizedBatch":
        return NormalizedBatch(
            atom_x=Tensor((batch.atom_x - self.atom_mean) / self.atom_std),
            g_edge=Tensor((batch.g_edge - self.g_edge_mean) / self.g_edge_std),
            h_x=Tensor((batch.h_x - self.h_x_mean) / self.h_x_std),
            h_edge=Tensor((batch.h_edge - self.h_edge_mean) / self.h_edge_std),
            batch=batch,
        )

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {
            "atom_mean": self.atom_mean, "atom_std": self.atom_std,
            "g_edge_mean": self.g_edge_mean, "g_edge_std": self.g_edge_std,
            "h_x_mean": self.h_x_mean, "h_x_std": self.h_x_std,
            "h_edge_mean": self.h_edge_mean, "h_edge_std": self.h_edge_std,
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "FeatureNormalizer":
        return cls(**{key: np.asarray(arrays[key], dtype=float)
                      for key in ("atom_mean", "atom_std", "g_edge_mean",
                                  "g_edge_std", "h_x_mean", "h_x_std",
                                  "h_edge_mean", "h_edge_std")})


@dataclass
class NormalizedBatch:
    """Standardized constant tensors ready for repeated forward passes."""

    atom_x: Tensor
    g_edge: Tensor
    h_x: Tensor
    h_edge: Tensor
    batch: PairBatch


@dataclass
class LayerPair:
    bond_conv: GinLayerParams
    atom_conv: GinLayerParams


def build_params(config: ModelConfig) -> tuple[ParameterSet, dict]:
    """Initialize all weights; returns the set and named handles."""
    rng = np.random.default_rng(config.seed)
    params = ParameterSet(rng_seed=config.seed)
    dim = config.embed_dim
    handles = {
        "atom_embed_w": params.add(
            "atom_embed.w", glorot_uniform(rng, graphrep.ATOM_NODE_WIDTH, dim)),
        "atom_embed_b": params.add("atom_embed.b", np.zeros(dim)),
        "bond_embed_w": params.add(
            "bond_embed.w", glorot_uniform(rng, graphrep.BOND_NODE_WIDTH, dim)),
        "bond_embed_b": params.add("bond_embed.b", np.zeros(dim)),
        "layers": [],
    }
    for k in range(config.num_layers):
        bond_conv = init_gin_layer(params, f"bond_conv{k}",
                                   graphrep.BOND_EDGE_WIDTH, dim, rng)
        atom_conv = init_gin_layer(params, f"atom_conv{k}",
                                   dim + graphrep.ATOM_EDGE_WIDTH, dim, rng)
        handles["layers"].append(LayerPair(bond_conv, atom_conv))
    n_outputs = 3 * 2  # (median, low offset, high offset) x (start, end)
    handles["head_w1"] = params.add("head.w1", glorot_uniform(rng, dim, dim))
    handles["head_b1"] = params.add("head.b1", np.zeros(dim))
    handles["head_w2"] = params.add("head.w2", glorot_uniform(rng, dim, n_outputs))
    # Offset columns start at softplus^-1(0.2): intervals open near a
    # plausible fraction of the (unit) normalized target scale instead
    # of softplus(0) ~ 0.69, which shortens calibration.
    head_bias = np.zeros(n_outputs)
    head_bias[[1, 2, 4, 5]] = np.log(np.expm1(0.2))
    handles["head_b2"] = params.add("head.b2", head_bias)
    return params, handles


HEAD_PARAM_PREFIX = "head."


@dataclass
class DualGraphQuantileModel:
    """Trained (or in-training) model state.

    ``interval_scale`` is a per-target multiplier on the quantile
    offsets, fitted on the validation split after training so the
    central band's empirical coverage matches its nominal level
    (split-conformal calibration); 1.0 means uncalibrated.
    """

    config: ModelConfig
    params: ParameterSet
    handles: dict
    feature_norm: FeatureNormalizer | None = None
    target_mean: np.ndarray | None = None
    target_std: np.ndarray | None = None
    interval_scale: np.ndarray = field(
        default_factory=lambda: np.ones(2))
    codebook_version: str = field(default_factory=graphrep.codebook_version)
    metadata: dict = field(default_factory=dict)

    @classmethod
    def initialize(cls, config: ModelConfig) -> "DualGraphQuantileModel":
        params, handles = build_params(config)
        return cls(config=config, params=params, handles=handles)

    # -- forward -------------------------------------------------------

    def forward_raw(self, normalized: NormalizedBatch) -> Tensor:
        """(n_graphs, 6) raw head outputs on the normalized target scale."""
        batch = normalized.batch
        if batch.codebook_version != self.codebook_version:
            raise CodebookMismatchError(
                f"batch built with codebook {batch.codebook_version!r}, "
                f"model trained with {self.codebook_version!r}")
        h = self.handles
        atoms = normalized.atom_x @ h["atom_embed_w"] + h["atom_embed_b"]
        bonds = normalized.h_x @ h["bond_embed_w"] + h["bond_embed_b"]
        for layer in h["layers"]:
            bonds = gin_layer(bonds, batch.h_src, batch.h_dst,
                              normalized.h_edge, layer.bond_conv)
            edge_inputs = concat_columns(
                [bonds.gather_rows(batch.edge_bond), normalized.g_edge])
            atoms = gin_layer(atoms, batch.g_src, batch.g_dst, edge_inputs,
                              layer.atom_conv)
        pooled = sum_pool(atoms, batch.graph_ids, batch.n_graphs)
        hidden = (pooled @ h["head_w1"] + h["head_b1"]).relu()
        return hidden @ h["head_w2"] + h["head_b2"]

    @staticmethod
    def quantile_columns(raw: Tensor) -> dict[tuple[str, float], Tensor]:
        """Map raw outputs to per-quantile columns (normalized scale)."""
        columns: dict[tuple[str, float], Tensor] = {}
        for t, target in enumerate(("v_start", "v_end")):
            median = raw.column(3 * t)
            low = median - raw.column(3 * t + 1).softplus()
            high = median + raw.column(3 * t + 2).softplus()
            columns[(target, 0.1)] = low
            columns[(target, 0.5)] = median
            columns[(target, 0.9)] = high
        return columns

    def loss(self, normalized: NormalizedBatch,
             targets_norm: np.ndarray) -> Tensor:
        """Pinball loss summed over both targets and all quantiles."""
        raw = self.forward_raw(normalized)
        columns = self.quantile_columns(raw)
        total = None
        for t, target in enumerate(("v_start", "v_end")):
            target_tensor = Tensor(targets_norm[:, t])
            for tau in self.config.quantiles:
                term = pinball_loss(columns[(target, tau)], target_tensor, tau)
                total = term if total is None else total + term
        return total

    # -- target scale ----------------------------------------------------

    def transform_targets(self, targets: np.ndarray) -> np.ndarray:
        """Physical volumes -> the model's working target scale."""
        if self.config.target_transform == "log":
            return np.log(np.maximum(targets, 1e-9))
        return np.asarray(targets, dtype=float)

    def inverse_transform(self, values: np.ndarray) -> np.ndarray:
        if self.config.target_transform == "log":
            return np.exp(values)
        return values

    # -- prediction ------------------------------------------------------

    def predict_batch(self, batch: PairBatch) -> np.ndarray:
        """(n, 2, 3) quantile predictions in mL, floored at zero."""
        if self.feature_norm is None or self.target_mean is None:
            raise RuntimeError("model has no normalization state; train it "
                               "or load a checkpoint first")
        normalized = self.feature_norm.apply(batch)
        raw = self.forward_raw(normalized)
        columns = self.quantile_columns(raw)
        low_tau, mid_tau, high_tau = self.config.quantiles
        out = np.empty((batch.n_graphs, 2, 3))
        for t, target in enumerate(("v_start", "v_end")):
            median = columns[(target, mid_tau)].data
            scale = float(self.interval_scale[t])
            low = median - scale * (median - columns[(target, low_tau)].data)
            high = median + scale * (columns[(target, high_tau)].data - median)
            for q, values in enumerate((low, median, high)):
                out[:, t, q] = self.inverse_transform(
                    values * self.target_std[t] + self.target_mean[t])
        return np.maximum(out, 0.0)

    def predict_records(self, records) -> np.ndarray:
        pairs = featurize_records(records)
        return self.predict_batch(batch_pairs(pairs))

    def predict_one(self, smiles: str,
                    conditions: graphrep.ExperimentalFeatures,
                    overrides: dict[str, float] | None = None,
                    ) -> QuantilePrediction:
        pair = featurize(smiles, conditions, overrides)
        quantiles = self.predict_batch(batch_pairs([pair]))[0]
        return QuantilePrediction(tuple(quantiles[0]), tuple(quantiles[1]))

    def parameter_arrays(self) -> dict[str, np.ndarray]:
        return self.params.clone_data()


_MOLECULE_CACHE: dict[str, tuple] = {}


def _molecule_features(smiles: str, overrides=None):
    key = smiles if overrides is None else None
    if key is not None and key in _MOLECULE_CACHE:
        return _MOLECULE_CACHE[key]
    mol = molparse.parse_smiles(smiles)
    desc = chemfeat.descriptor_vector(mol, overrides)
    geo = chemfeat.idealized_geometry(mol)
    value = (mol, desc, geo)
    if key is not None:
        _MOLECULE_CACHE[key] = value
    return value


def featurize(smiles: str, conditions: graphrep.ExperimentalFeatures,
              overrides: dict[str, float] | None = None,
              ) -> graphrep.DualGraphPair:
    """SMILES + conditions -> dual-graph tensors (with molecule caching)."""
    mol, desc, geo = _molecule_features(smiles, overrides)
    return graphrep.build_pair(mol, desc, geo, conditions)


def featurize_records(records) -> list[graphrep.DualGraphPair]:
    return [featurize(r.smiles, r.conditions()) for r in records]
