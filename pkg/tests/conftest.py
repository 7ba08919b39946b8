import numpy as np
import pytest

from floqept import GridSpec, ModelParams, SimConfig


@pytest.fixture
def coupled_point() -> ModelParams:
    """Coupled working point: red-detuned carrier against the +1 sideband."""
    return ModelParams(
        delta0=-3050.0,
        gamma_c=93.0,
        gamma12=50.0,
        delta_b=4300.0,
        omega_b=3000.0,
        n1=1,
        n2=0,
    )


@pytest.fixture
def base_cfg() -> SimConfig:
    return SimConfig(truncation_m=5, grid=GridSpec(-4000.0, 1000.0, 2.0))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260808)
