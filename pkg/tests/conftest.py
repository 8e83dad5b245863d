import pytest

from mvpmcmc import kuramoto_model, natural_parameter, simulate_data


@pytest.fixture(scope="session")
def model():
    return kuramoto_model()


@pytest.fixture(scope="session")
def truth():
    return natural_parameter(0.0, 0.2, 1.0)


@pytest.fixture(scope="session")
def obs10(model, truth):
    """Small shared dataset: 10 observations at a fine reference grid."""
    return simulate_data(model, truth, T=10, level=6, N=100, seed=21)
