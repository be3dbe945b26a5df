import numpy as np
import pytest

from data_generator import NoiseSpec, generate_dataset, system_spec
from evolution_core import GoalPoint
from narx_model import Dataset, generate_model_set


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_model_set():
    # (2, 2, 2): 15 candidate terms
    return generate_model_set(2, 2, 2)


@pytest.fixture
def goal():
    return GoalPoint(20, 30.0)


@pytest.fixture
def s6_clean():
    """S6 without equation noise, 400 samples"""
    spec = system_spec("S6", noise=NoiseSpec.wgn(0.0, 0.0), n_samples=400, estimation_len=280, seed=3)
    return generate_dataset(spec)


@pytest.fixture
def s6_noisy():
    return generate_dataset(system_spec("S6", n_samples=300, estimation_len=210, seed=5))


@pytest.fixture
def toy_data():
    u = [1.0, 2.0, 3.0, 4.0, 5.0]
    y = [0.5, 1.0, 2.0, 3.0, 5.0]
    return Dataset(u, y, 3, "toy")


@pytest.fixture
def s6_truth():
    return system_spec("S6").true_structure()
