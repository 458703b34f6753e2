"""Checkpoint container: one .npz with a JSON header and named arrays.

The header records the format version, model kind, configuration,
codebook version and training metadata; parameters and normalization
statistics are stored as named float64 arrays, so a save/load cycle
reproduces bit-identical predictions.
"""

from __future__ import annotations

import json
import zipfile

import numpy as np

from .. import graphrep
from .baseline import BaselineConfig, BaselineModel
from .dualgraph import DualGraphQuantileModel, FeatureNormalizer, ModelConfig

FORMAT_VERSION = "1"

_META_KEY = "meta_json"
_PARAM_PREFIX = "param/"
_NORM_PREFIX = "featnorm/"


class VersionMismatchError(ValueError):
    """Checkpoint written under a different format or codebook version."""


class CorruptFileError(ValueError):
    """File is not a readable checkpoint container."""


def _meta_array(meta: dict) -> np.ndarray:
    return np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)


def save_checkpoint(path, model) -> None:
    """Serialize a trained model (dual-graph or baseline)."""
    arrays: dict[str, np.ndarray] = {}
    if isinstance(model, DualGraphQuantileModel):
        kind = "dualgraph"
        config = model.config.to_dict()
        if model.feature_norm is None or model.target_mean is None:
            raise ValueError("model is untrained; nothing worth saving")
        for name, value in model.feature_norm.as_arrays().items():
            arrays[_NORM_PREFIX + name] = value
        arrays["target_mean"] = model.target_mean
        arrays["target_std"] = model.target_std
        arrays["interval_scale"] = model.interval_scale
    elif isinstance(model, BaselineModel):
        kind = "baseline"
        config = model.config.to_dict()
        arrays["x_mean"] = model.x_mean
        arrays["x_std"] = model.x_std
        arrays["target_mean"] = model.y_mean
        arrays["target_std"] = model.y_std
    else:
        raise TypeError(f"cannot checkpoint {type(model).__name__}")

    for name, value in model.parameter_arrays().items():
        arrays[_PARAM_PREFIX + name] = value

    metadata = {k: v for k, v in model.metadata.items()
                if k not in ("curve_train", "curve_val")}
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": config,
        "codebook_version": getattr(model, "codebook_version",
                                    graphrep.codebook_version()),
        "metadata": metadata,
    }
    if "curve_train" in model.metadata:
        arrays["curve/train"] = np.asarray(model.metadata["curve_train"])
        arrays["curve/val"] = np.asarray(model.metadata["curve_val"])
    np.savez(path, **{_META_KEY: _meta_array(meta)}, **arrays)


def load_checkpoint(path):
    """Reconstruct a model from a checkpoint file.

    Raises:
        CorruptFileError: unreadable or structurally damaged file.
        VersionMismatchError: format or codebook version differs from
            this installation.
    """
    try:
        with np.load(path) as bundle:
            if _META_KEY not in bundle:
                raise CorruptFileError(f"{path}: missing checkpoint header")
            try:
                meta = json.loads(bytes(bundle[_META_KEY]).decode())
            except (ValueError, UnicodeDecodeError) as exc:
                raise CorruptFileError(f"{path}: unreadable header") from exc
            arrays = {key: bundle[key] for key in bundle.files
                      if key != _META_KEY}
    except (OSError, zipfile.BadZipFile, EOFError, KeyError) as exc:
        raise CorruptFileError(f"{path}: not a checkpoint file ({exc})") from exc

    if meta.get("format_version") != FORMAT_VERSION:
        raise VersionMismatchError(
            f"checkpoint format {meta.get('format_version')!r}, "
            f"this build reads {FORMAT_VERSION!r}")
    if meta.get("codebook_version") != graphrep.codebook_version():
        raise VersionMismatchError(
            f"checkpoint codebook {meta.get('codebook_version')!r}, "
            f"installed {graphrep.codebook_version()!r}")

    params = {name[len(_PARAM_PREFIX):]: value
              for name, value in arrays.items()
              if name.startswith(_PARAM_PREFIX)}
    try:
        if meta["kind"] == "dualgraph":
            model = DualGraphQuantileModel.initialize(
                ModelConfig.from_dict(meta["config"]))
            model.params.load_data(params)
            model.feature_norm = FeatureNormalizer.from_arrays(
                {name[len(_NORM_PREFIX):]: value
                 for name, value in arrays.items()
                 if name.startswith(_NORM_PREFIX)})
            model.target_mean = arrays["target_mean"]
            model.target_std = arrays["target_std"]
            model.interval_scale = arrays.get("interval_scale", np.ones(2))
            model.codebook_version = meta["codebook_version"]
        elif meta["kind"] == "baseline":
            model = BaselineModel.initialize(
                BaselineConfig.from_dict(meta["config"]))
            model.params.load_data(params)
            model.x_mean = arrays["x_mean"]
            model.x_std = arrays["x_std"]
            model.y_mean = arrays["target_mean"]
            model.y_std = arrays["target_std"]
        else:
            raise CorruptFileError(f"unknown model kind {meta['kind']!r}")
    except KeyError as exc:
        raise CorruptFileError(f"{path}: missing array {exc}") from exc

    model.metadata = dict(meta.get("metadata", {}))
    if "curve/train" in arrays:
        model.metadata["curve_train"] = arrays["curve/train"].tolist()
        model.metadata["curve_val"] = arrays["curve/val"].tolist()
    return model
