from __future__ import annotations

import numpy as np
import pytest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def real_grid() -> np.ndarray:
    return np.linspace(-4.0, 4.0, 33)
