import numpy as np
import pytest

from nfxl import ArrayConfig


@pytest.fixture(scope="session")
def paper_cfg():
    """Reference configuration: N=256, 30 GHz, half-wavelength spacing,
    15 m mast, 5 degree tilt."""
    return ArrayConfig()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_channels(rng, n, k):
    """i.i.d. complex Gaussian channel matrix, unit average entry power."""
    return (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / np.sqrt(2.0)
