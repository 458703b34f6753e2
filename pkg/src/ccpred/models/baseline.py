"""Feed-forward baseline on flat fingerprint/descriptor/condition rows.

Input rows are 192-wide: the 167-bit structural fingerprint, the 16
molecular descriptors, and 9 experimental values (6 volume-weighted
solvent descriptors plus the 3 column dimensions).  Three hidden layers
of 50 leaky-relu units regress both volume targets under mean squared
error, with early stopping on a validation split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import chemfeat, graphrep
from ..engine import (
    AdamState,
    ParameterSet,
    Tensor,
    adam_step,
    backward,
    glorot_uniform,
    mse_loss,
)

FEATURE_WIDTH = chemfeat.FINGERPRINT_BITS + len(chemfeat.DESCRIPTOR_NAMES) + 9


class WidthMismatchError(ValueError):
    """Feature rows are not 192 wide."""


@dataclass(frozen=True)
class BaselineConfig:
    hidden_layers: tuple[int, ...] = (50, 50, 50)
    lr: float = 1e-3
    max_epochs: int = 10_000
    early_stop_patience: int = 200
    leaky_slope: float = 0.01
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "hidden_layers": list(self.hidden_layers),
            "lr": self.lr,
            "max_epochs": self.max_epochs,
            "early_stop_patience": self.early_stop_patience,
            "leaky_slope": self.leaky_slope,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "BaselineConfig":
        payload = dict(payload)
        payload["hidden_layers"] = tuple(payload["hidden_layers"])
        return cls(**payload)


def baseline_features(record) -> np.ndarray:
    """One 192-wide feature row for an experiment record."""
    from .dualgraph import _molecule_features  # shared molecule cache

    mol, desc, _ = _molecule_features(record.smiles)
    conditions = record.conditions()
    return np.concatenate([
        chemfeat.fingerprint(mol).bits.astype(float),
        desc.as_array(),
        conditions.solvent_weighted,
        conditions.column_info,
    ])


def baseline_feature_table(records) -> np.ndarray:
    return np.stack([baseline_features(r) for r in records])


@dataclass
class BaselineModel:
    """Weights plus input/target normalization."""

    config: BaselineConfig
    params: ParameterSet
    x_mean: np.ndarray | None = None
    x_std: np.ndarray | None = None
    y_mean: np.ndarray | None = None
    y_std: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def initialize(cls, config: BaselineConfig) -> "BaselineModel":
        rng = np.random.default_rng(config.seed)
        params = ParameterSet(rng_seed=config.seed)
        widths = (FEATURE_WIDTH, *config.hidden_layers, 2)
        for i in range(len(widths) - 1):
            params.add(f"mlp.w{i}", glorot_uniform(rng, widths[i], widths[i + 1]))
            params.add(f"mlp.b{i}", np.zeros(widths[i + 1]))
        return cls(config=config, params=params)

    def _forward(self, x: Tensor) -> Tensor:
        n_layers = len(self.config.hidden_layers) + 1
        out = x
        for i in range(n_layers):
            out = out @ self.params[f"mlp.w{i}"] + self.params[f"mlp.b{i}"]
            if i < n_layers - 1:
                out = out.leaky_relu(self.config.leaky_slope)
        return out

    def predict(self, features: np.ndarray) -> np.ndarray:
        """(n, 2) point predictions in mL for 192-wide feature rows."""
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != FEATURE_WIDTH:
            raise WidthMismatchError(
                f"expected (n, {FEATURE_WIDTH}) features, got {features.shape}")
        x = Tensor((features - self.x_mean) / self.x_std)
        out = self._forward(x).data
        return out * self.y_std + self.y_mean

    def parameter_arrays(self) -> dict[str, np.ndarray]:
        return self.params.clone_data()


def baseline_train(features: np.ndarray, targets: np.ndarray,
                   config: BaselineConfig | None = None,
                   val_fraction: float = 0.15) -> BaselineModel:
    """Fit the baseline with early stopping on a held-out slice.

    Raises:
        WidthMismatchError: feature rows are not 192 wide.
    """
    config = config or BaselineConfig()
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if features.ndim != 2 or features.shape[1] != FEATURE_WIDTH:
        raise WidthMismatchError(
            f"expected (n, {FEATURE_WIDTH}) features, got {features.shape}")
    if targets.shape != (features.shape[0], 2):
        raise WidthMismatchError(
            f"expected (n, 2) targets, got {targets.shape}")

    model = BaselineModel.initialize(config)
    rng = np.random.default_rng(config.seed)
    n = features.shape[0]
    order = rng.permutation(n)
    n_val = max(1, int(round(val_fraction * n))) if n > 3 else 1
    val_idx, train_idx = order[:n_val], order[n_val:]
    if train_idx.size == 0:
        train_idx = val_idx

    model.x_mean = features[train_idx].mean(axis=0)
    x_std = features[train_idx].std(axis=0)
    x_std[x_std < 1e-12] = 1.0
    model.x_std = x_std
    model.y_mean = targets[train_idx].mean(axis=0)
    y_std = targets[train_idx].std(axis=0)
    y_std[y_std < 1e-8] = 1.0
    model.y_std = y_std

    x_train = Tensor((features[train_idx] - model.x_mean) / model.x_std)
    y_train = Tensor((targets[train_idx] - model.y_mean) / model.y_std)
    x_val = Tensor((features[val_idx] - model.x_mean) / model.x_std)
    y_val = Tensor((targets[val_idx] - model.y_mean) / model.y_std)

    adam = AdamState.for_params(model.params, lr=config.lr)
    best_val = np.inf
    best_arrays = model.params.clone_data()
    stale = 0
    curve: list[float] = []
    for epoch in range(config.max_epochs):
        loss = mse_loss(model._forward(x_train), y_train)
        model.params.zero_grad()
        backward(loss)
        adam_step(model.params, adam)
        val_loss = mse_loss(model._forward(x_val), y_val).item()
        curve.append(val_loss)
        if val_loss < best_val - 1e-12:
            best_val = val_loss
            best_arrays = model.params.clone_data()
            stale = 0
        else:
            stale += 1
            if stale >= config.early_stop_patience:
                break
    model.params.load_data(best_arrays)
    model.metadata = {"epochs_run": len(curve), "best_val_loss": best_val,
                      "seed": config.seed}
    return model
