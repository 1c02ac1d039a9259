import numpy as np
import pytest

from aggonset.features import FeatureSubset, extract_dataset
from aggonset.synthgen import PopulationConfig, generate_population


@pytest.fixture(scope="session")
def small_population():
    config = PopulationConfig(n_participants=4, sessions_per_participant=1,
                              session_duration=1200.0, seed=7)
    return generate_population(config)


@pytest.fixture(scope="session")
def small_dataset(small_population):
    return extract_dataset(small_population, 60.0, 60.0, FeatureSubset.ALL)


@pytest.fixture(scope="session")
def tiny_session():
    config = PopulationConfig(n_participants=1, sessions_per_participant=1,
                              session_duration=600.0, seed=11)
    return generate_population(config)[0]


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
