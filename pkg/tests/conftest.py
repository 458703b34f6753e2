import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ccpred import dataio
from ccpred.graphrep import ExperimentalFeatures
from ccpred.models import ModelConfig, train


@pytest.fixture
def conditions_4g() -> ExperimentalFeatures:
    return ExperimentalFeatures.from_conditions("4g", "20/1", 60.0, "DCM", 1.0)


# A tiny but genuinely trained model, shared across CLI/planner tests.
# Small dims keep this under half a minute for the whole session.
TINY_CONFIG = ModelConfig(num_layers=2, embed_dim=16, max_epochs=80,
                          lr=8e-3, early_stop_patience=40, seed=21,
                          batch_size=2048)


@pytest.fixture(scope="session")
def tiny_dataset():
    return dataio.synth_dataset(240, seed=31)


@pytest.fixture(scope="session")
def tiny_model(tiny_dataset):
    model, split = train(tiny_dataset.records, TINY_CONFIG)
    return model, split, tiny_dataset


@pytest.fixture(scope="session")
def tiny_checkpoint(tiny_model, tmp_path_factory):
    from ccpred.models import save_checkpoint

    model, _, _ = tiny_model
    path = tmp_path_factory.mktemp("ckpt") / "tiny.npz"
    save_checkpoint(path, model)
    return path


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
