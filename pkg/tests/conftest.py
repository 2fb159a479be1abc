import math

import pytest

from hgtransit import CavityParams, ModeSpec, derive

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def params():
    """Reference cavity: L = 123 um, R = 20 cm, lambda = 780.2 nm."""
    return CavityParams(
        length=123e-6, roc1=0.2, roc2=0.2, wavelength=780.2e-9,
        kappa=TWO_PI * 1.4e6, gamma=TWO_PI * 3.0e6, g0=TWO_PI * 16e6,
    )


@pytest.fixture(scope="session")
def waist(params):
    return derive(params).waist


@pytest.fixture(scope="session")
def mode_table(waist):
    return {
        "hg00": ModeSpec(0, 0, waist),
        "hg10": ModeSpec(1, 0, waist),
        "hg01": ModeSpec(0, 1, waist),
        "hg010": ModeSpec(0, 10, waist),
    }
