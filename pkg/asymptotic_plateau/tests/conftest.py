import numpy as np
import pytest

from tool_kit.config_loader import CONFIG


@pytest.fixture
def rng():
    return np.random.default_rng(CONFIG.get("seed", 20240601))
