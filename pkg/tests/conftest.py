import functools
import warnings

import numpy as np
import pytest

from heateff.simulate import simulate, standard_scenarios


@functools.lru_cache(maxsize=None)
def _simulated(name: str, seed: int | None = None):
    spec = standard_scenarios()[name]
    if seed is not None:
        spec = spec.replace(seed=seed)
    series, truth = simulate(spec)
    return spec, series, truth


@functools.lru_cache(maxsize=None)
def _pair(name: str):
    from heateff.control_effect import calibrate_pair

    spec, series, _ = _simulated(name)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return calibrate_pair(series, spec.windows())


@pytest.fixture
def scenario():
    """``scenario(name, seed=None) -> (spec, series, truth)``, cached per session."""
    return _simulated


@pytest.fixture
def model_pair():
    """``model_pair(name)`` calibrated on the default windows, cached."""
    return _pair


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
