import numpy as np
import pytest

from lsboost import Dataset, OracleSpec, SurfaceSpec, TrainConfig, sample_surface, train


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@pytest.fixture(scope="session")
def c0_small():
    """A 2000-point noiseless sample of the four-bowl surface."""
    data, record = sample_surface(SurfaceSpec(surface="c0", n=2000, seed=7))
    return data, record


@pytest.fixture(scope="session")
def trained_tree(c0_small):
    """A multi-round model: depth-3 trees on the small c0 sample, m=100."""
    data, _ = c0_small
    config = TrainConfig(oracle=OracleSpec(kind="tree", depth=3), levels_m=100)
    model, report = train(data, config)
    return model, report, config, data


@pytest.fixture
def two_point():
    """y = x over x in {0, 1}: the smallest dataset with signal."""
    return Dataset(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
