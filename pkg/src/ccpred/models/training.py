"""Training, early stopping, and the small-dataset transfer procedure.

Training minimizes the summed pinball loss over both volume targets at
all three quantiles, on normalized targets, with Adam and an optional
step learning-rate schedule.  The returned parameters are the snapshot
with the best validation loss.  Transfer copies every weight from a
base model except the readout head and the column-info slots of the
atom-graph edge projections (both freshly initialized), recomputes the
target normalization for the new column, and fine-tunes everything at a
low, floored learning rate.
"""

from __future__ import annotations

import logging

import numpy as np

from .. import dataio, graphrep
from ..engine import AdamState, StepLR, adam_step, backward, glorot_uniform
from .dualgraph import (
    COLUMN_FEATURE_SLOTS,
    HEAD_PARAM_PREFIX,
    DualGraphQuantileModel,
    FeatureNormalizer,
    ModelConfig,
    batch_pairs,
    featurize_records,
)

logger = logging.getLogger(__name__)


class EmptyDatasetError(ValueError):
    """No valid records to train on after sentinel filtering."""


class DivergenceDetectedError(RuntimeError):
    """Training produced a non-finite loss."""


def _normalize_targets(targets: np.ndarray,
                       mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return (targets - mean) / std


def _target_stats(targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = targets.mean(axis=0)
    std = targets.std(axis=0)
    std[std < 1e-8] = 1.0
    return mean, std


def fit(train_records, val_records, config: ModelConfig | None = None,
        train_targets: np.ndarray | None = None,
        model: DualGraphQuantileModel | None = None,
        schedule: StepLR | None = None) -> DualGraphQuantileModel:
    """Core loop: fit a (possibly pre-initialized) model on fixed splits.

    Args:
        train_records/val_records: valid experiment records.
        config: hyperparameters (ignored when ``model`` is given).
        train_targets: optional (n, 2) replacement training targets
            (used by noise-injection sweeps); validation targets always
            come from the records.
        model: start from this state instead of a fresh initialization
            (transfer).  Its feature normalization, when present, is
            kept except for the column-info slots.
        schedule: learning-rate schedule; defaults to the config's.

    Raises:
        EmptyDatasetError: no training or validation records.
        DivergenceDetectedError: non-finite loss during training.
    """
    if not train_records or not val_records:
        raise EmptyDatasetError("need nonempty training and validation sets")
    if model is None:
        config = config or ModelConfig()
        model = DualGraphQuantileModel.initialize(config)
    config = model.config

    train_batch = batch_pairs(featurize_records(train_records))
    val_batch = batch_pairs(featurize_records(val_records))
    targets = model.transform_targets(
        np.asarray(train_targets, dtype=float) if train_targets is not None
        else dataio.volume_targets(train_records))
    val_targets = model.transform_targets(
        dataio.volume_targets(val_records))

    model.target_mean, model.target_std = _target_stats(targets)
    refreshed = FeatureNormalizer.fit(train_batch)
    if model.feature_norm is None:
        model.feature_norm = refreshed
    else:
        # Transfer: keep the base statistics, re-center only the
        # refreshed column-info slots.
        for slot in COLUMN_FEATURE_SLOTS:
            model.feature_norm.g_edge_mean[slot] = refreshed.g_edge_mean[slot]
            model.feature_norm.g_edge_std[slot] = refreshed.g_edge_std[slot]

    train_norm = model.feature_norm.apply(train_batch)
    val_norm = model.feature_norm.apply(val_batch)
    targets_norm = _normalize_targets(targets, model.target_mean,
                                      model.target_std)
    val_targets_norm = _normalize_targets(val_targets, model.target_mean,
                                          model.target_std)

    if schedule is None:
        schedule = StepLR(config.lr, gamma=config.lr_gamma,
                          step_size=config.lr_step_size,
                          final_lr=min(config.lr_floor, config.lr))

    n_train = len(train_records)
    batch_size = min(config.batch_size, n_train)
    full_batch = batch_size == n_train
    rng = np.random.default_rng(config.seed + 1)

    adam = AdamState.for_params(model.params, lr=config.lr)
    best_val = np.inf
    best_arrays = model.params.clone_data()
    best_epoch = -1
    curve_train: list[float] = []
    curve_val: list[float] = []
    epochs_without_improvement = 0

    for epoch in range(config.max_epochs):
        lr = schedule.lr(epoch)
        if full_batch:
            epoch_loss = _step(model, adam, train_norm, targets_norm, lr)
        else:
            order = rng.permutation(n_train)
            losses = []
            for start in range(0, n_train, batch_size):
                chosen = order[start:start + batch_size]
                sub_records = [train_records[i] for i in chosen]
                sub_batch = batch_pairs(featurize_records(sub_records))
                sub_norm = model.feature_norm.apply(sub_batch)
                losses.append(_step(model, adam, sub_norm,
                                    targets_norm[chosen], lr))
            epoch_loss = float(np.mean(losses))

        val_loss = model.loss(val_norm, val_targets_norm).item()
        if not np.isfinite(epoch_loss) or not np.isfinite(val_loss):
            raise DivergenceDetectedError(
                f"non-finite loss at epoch {epoch}")
        curve_train.append(epoch_loss)
        curve_val.append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_arrays = model.params.clone_data()
            best_epoch = epoch
            epochs_without_improvement = 0
        else:
            epochs_without_improvement += 1
            if epochs_without_improvement >= config.early_stop_patience:
                logger.info("early stop at epoch %d (best %d)", epoch,
                            best_epoch)
                break

    if config.max_epochs > 0:
        model.params.load_data(best_arrays)
    model.interval_scale = _calibrate_intervals(model, val_norm,
                                                val_targets_norm)
    model.metadata.update({
        "epochs_run": len(curve_train),
        "best_epoch": best_epoch,
        "best_val_loss": best_val if np.isfinite(best_val) else None,
        "seed": config.seed,
        "n_train": n_train,
        "n_validation": len(val_records),
        "interval_scale": model.interval_scale.tolist(),
        "curve_train": curve_train,
        "curve_val": curve_val,
    })
    return model


def _calibrate_intervals(model, val_norm, val_targets_norm) -> np.ndarray:
    """Split-conformal scale so the central band covers its nominal
    fraction of the validation targets.

    For each point the minimal offset multiple that would cover it is
    (y - median) / offset on the winning side; the calibrated scale is
    that distribution's nominal-coverage quantile, floored at a small
    positive value.
    """
    low_tau, mid_tau, high_tau = model.config.quantiles
    nominal = high_tau - low_tau
    raw = model.forward_raw(val_norm)
    columns = model.quantile_columns(raw)
    scales = np.ones(2)
    for t, target in enumerate(("v_start", "v_end")):
        median = columns[(target, mid_tau)].data
        low_offset = np.maximum(median - columns[(target, low_tau)].data, 1e-9)
        high_offset = np.maximum(columns[(target, high_tau)].data - median, 1e-9)
        residual = val_targets_norm[:, t] - median
        needed = np.where(residual >= 0, residual / high_offset,
                          -residual / low_offset)
        scales[t] = max(float(np.quantile(needed, nominal)), 1e-6)
    return scales


def _step(model, adam, normalized, targets_norm, lr) -> float:
    try:
        loss = model.loss(normalized, targets_norm)
        model.params.zero_grad()
        backward(loss)
    except FloatingPointError as exc:
        raise DivergenceDetectedError(str(exc)) from exc
    adam_step(model.params, adam, lr=lr)
    return loss.item()


def train(records, config: ModelConfig | None = None,
          ) -> tuple[DualGraphQuantileModel, dataio.DatasetSplit]:
    """Split 80/10/10, fit with early stopping, return model + split.

    Sentinel rows are filtered first; the split is deterministic for
    the config seed.
    """
    config = config or ModelConfig()
    usable = dataio.valid_records(records)
    if not usable:
        raise EmptyDatasetError("no valid records after sentinel filtering")
    split = dataio.split_random(len(usable), (0.8, 0.1, 0.1), seed=config.seed)
    train_set = [usable[i] for i in split.train]
    val_set = [usable[i] for i in split.validation]
    model = fit(train_set, val_set, config)
    model.metadata["split"] = {
        "train": split.train.tolist(),
        "validation": split.validation.tolist(),
        "test": split.test.tolist(),
        "seed": split.seed,
    }
    return model, split


def transfer(base: DualGraphQuantileModel, records,
             lr: float = 1e-4, max_epochs: int | None = None,
             seed: int | None = None,
             schedule: StepLR | None = None,
             ) -> tuple[DualGraphQuantileModel, dataio.DatasetSplit]:
    """Adapt a trained model to a new column's (small) dataset.

    All base parameters are copied; the readout head and the
    column-info rows of each atom-graph edge projection are freshly
    initialized; everything is then fine-tuned at the low learning rate
    with a floor of 1e-4.
    """
    usable = dataio.valid_records(records)
    if not usable:
        raise EmptyDatasetError("no valid records after sentinel filtering")

    seed = base.config.seed + 1000 if seed is None else seed
    config = ModelConfig.from_dict({
        **base.config.to_dict(),
        "lr": lr, "seed": seed,
        "max_epochs": (base.config.max_epochs
                       if max_epochs is None else max_epochs)})
    model = DualGraphQuantileModel.initialize(config)

    base_arrays = base.parameter_arrays()
    fresh_rng = np.random.default_rng(seed)
    dim = config.embed_dim
    for name, tensor in model.params.tensors.items():
        if name.startswith(HEAD_PARAM_PREFIX):
            continue  # keep the fresh initialization
        tensor.data = base_arrays[name].copy()
    # Refresh the input slots that carry column information: the rows
    # of each atom-conv edge projection that multiply those features.
    edge_offset = dim  # bond embedding block precedes the static features
    for k in range(config.num_layers):
        proj = model.params[f"atom_conv{k}.edge_proj"]
        for slot in COLUMN_FEATURE_SLOTS:
            proj.data[edge_offset + slot] = glorot_uniform(
                fresh_rng, proj.data.shape[0], dim, shape=(dim,))

    if base.feature_norm is not None:
        model.feature_norm = FeatureNormalizer.from_arrays(
            {k: v.copy() for k, v in base.feature_norm.as_arrays().items()})
    model.codebook_version = base.codebook_version

    split = dataio.split_random(len(usable), (0.8, 0.1, 0.1), seed=seed)
    train_set = [usable[i] for i in split.train]
    val_set = [usable[i] for i in split.validation]
    if schedule is None:
        schedule = StepLR(lr, gamma=0.5, step_size=100, final_lr=1e-4)
    if config.max_epochs == 0:
        # Zero-epoch transfer still needs prediction-ready statistics.
        batch = batch_pairs(featurize_records(train_set))
        refreshed = FeatureNormalizer.fit(batch)
        for slot in COLUMN_FEATURE_SLOTS:
            model.feature_norm.g_edge_mean[slot] = refreshed.g_edge_mean[slot]
            model.feature_norm.g_edge_std[slot] = refreshed.g_edge_std[slot]
        model.target_mean, model.target_std = _target_stats(
            model.transform_targets(dataio.volume_targets(train_set)))
        model.metadata["epochs_run"] = 0
    else:
        fit(train_set, val_set, model=model, schedule=schedule)
    model.metadata["transferred_from_seed"] = base.config.seed
    model.metadata["split"] = {
        "train": split.train.tolist(),
        "validation": split.validation.tolist(),
        "test": split.test.tolist(),
        "seed": split.seed,
    }
    return model, split
