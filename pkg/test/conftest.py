import os

import pytest

from ramanujan.model import Model, build_model
from ramanujan.sinetype import SineTypeData, build_sine_type
from ramanujan.spectrum import EigenData, solve_eigen


CONFIG_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs", "default.json")


@pytest.fixture(scope="session")
def config_path() -> str:
    return CONFIG_PATH


@pytest.fixture(scope="session")
def jacobi_model() -> Model:
    return build_model(1.0, 1.0)


@pytest.fixture(scope="session")
def half_model() -> Model:
    """alpha = beta = 1/2, where phi_lambda(t) = 2 sin(lambda t) / (lambda sinh 2t)."""
    return build_model(0.5, 0.5)


@pytest.fixture(scope="session")
def perturbed_model() -> Model:
    return build_model(1.0, 1.0, (2.0,))


@pytest.fixture(scope="session")
def jacobi_eigen(jacobi_model: Model) -> EigenData:
    return solve_eigen(jacobi_model, 20)


@pytest.fixture(scope="session")
def perturbed_eigen(perturbed_model: Model) -> EigenData:
    return solve_eigen(perturbed_model, 20)


@pytest.fixture(scope="session")
def jacobi_sine(jacobi_model: Model, jacobi_eigen: EigenData) -> SineTypeData:
    return build_sine_type(jacobi_model, jacobi_eigen)


@pytest.fixture(scope="session")
def perturbed_sine(perturbed_model: Model, perturbed_eigen: EigenData) -> SineTypeData:
    return build_sine_type(perturbed_model, perturbed_eigen)
