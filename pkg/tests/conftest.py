import numpy as np
import pytest

from lsband import EvalGrid, density


@pytest.fixture(scope="session")
def normal_model():
    return density.standard_normal()


@pytest.fixture(scope="session")
def sharp_model():
    return density.sharp_mode()


@pytest.fixture(scope="session")
def normal_sample_2000(normal_model):
    return normal_model.sample(2000, 1234)


@pytest.fixture(scope="session")
def normal_grid_512():
    return EvalGrid.from_box([-6.0, -6.0], [6.0, 6.0], 512)


@pytest.fixture(scope="session")
def normal_values_512(normal_model, normal_grid_512):
    return normal_grid_512.evaluate(normal_model.pdf)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
