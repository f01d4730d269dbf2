from pathlib import Path

import numpy as np
import pytest
from omegaconf import OmegaConf

from seqmine.models.bilstm_msa import ModelArgs, ModelParams

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_args() -> ModelArgs:
    # d=3, h=4, two scales with W=3 and W=7, three classes
    return ModelArgs(input_dim=3, num_classes=3, hidden_size=4, window_lengths=[3, 7], seed=11)


@pytest.fixture
def tiny_model(tiny_args) -> ModelParams:
    return ModelParams.init(tiny_args)


@pytest.fixture
def tiny_run_config(tmp_path) -> Path:
    """A run spec small enough for CLI tests: 2 classes, short sequences, few epochs."""

    config = {
        "seed": 3,
        "synth": {
            "num_classes": 2,
            "samples_per_class": 6,
            "length": 12,
            "channels": 2,
            "motif_length": 4,
        },
        "model": {"hidden_size": 3, "window_lengths": [3]},
        "train": {"max_epochs": 2, "batch_size": 4, "lr": 0.01, "progress": False},
        "sweep": {"lengths": [8, 12], "windows": [1, 3]},
    }
    path = tmp_path / "tiny.yaml"
    OmegaConf.save(OmegaConf.create(config), path)
    return path
