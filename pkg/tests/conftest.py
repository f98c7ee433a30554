from pathlib import Path

import numpy as np
import pytest

from frechet_consensus.harness.config import CONFIG_DIR


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR
