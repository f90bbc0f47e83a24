import functools

import numpy as np
import pytest

from critmetric.charts import ModelSpec, build_model


@functools.lru_cache(maxsize=None)
def model(family, n, radius=1.0, eps=0.05, seed=0):
    """Models are cached per session so JIT compilation happens once."""
    return build_model(ModelSpec(family, n, radius, eps, seed))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
