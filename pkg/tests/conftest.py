import pytest

from quafe.circuit import Coupling
from quafe.config import default_config
from quafe.core import lorentz_factors
from quafe.coupler import mean_photon_numbers
from quafe.waveguide import WaveguideSpec

DIAMOND = WaveguideSpec(5.8, 600.0, 800.0, 4)


@pytest.fixture(scope="session")
def diamond():
    return DIAMOND


@pytest.fixture(scope="session")
def config():
    return default_config()


@pytest.fixture(scope="session")
def calibrated(config):
    """Calibrated geometry of the shipped defaults."""
    return config.calibrated()


@pytest.fixture(scope="session")
def result_200(config, calibrated):
    return mean_photon_numbers(lorentz_factors(200e3), config.waveguide, calibrated)


@pytest.fixture(scope="session")
def coupling_200(result_200):
    return Coupling.from_result(result_200)
