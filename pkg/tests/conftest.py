from __future__ import annotations

import numpy as np
import pytest

from src.kernels.base import QuadratureSpec
from src.model import ModelParams


@pytest.fixture
def spec() -> QuadratureSpec:
    return QuadratureSpec()


@pytest.fixture
def chain() -> ModelParams:
    return ModelParams.uniform(1)


@pytest.fixture
def square() -> ModelParams:
    return ModelParams.uniform(2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
