import numpy as np
import pytest

from skelchaos import ReservoirSpec, build_reservoir, lissajous


@pytest.fixture(scope="session")
def small_reservoir():
    """A 40-node reservoir shared by structural tests."""
    spec = ReservoirSpec(
        n_nodes=40, leak_rate=0.5, spectral_scale=1.1, input_scale=0.2, seed=11, input_dim=2
    )
    return build_reservoir(spec)


@pytest.fixture(scope="session")
def lissajous_300():
    return lissajous(300)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
