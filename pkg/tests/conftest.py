import numpy as np
import pytest

from vortexlab.fields import BundleSpec
from vortexlab.geometry import build_torus


@pytest.fixture(scope="session")
def g32():
    """Unit complex 1-torus at moderate resolution."""
    return build_torus((1.0,), (32,))


@pytest.fixture(scope="session")
def g64():
    return build_torus((1.0,), (64,))


@pytest.fixture(scope="session")
def g8_4():
    """Unit complex 2-torus (T^4) at the smallest allowed resolution."""
    return build_torus((1.0, 1.0), (8, 8))


@pytest.fixture(scope="session")
def g16_4():
    return build_torus((1.0, 1.0), (16, 16))


@pytest.fixture(scope="session")
def line0():
    return BundleSpec(1, 0, "E")


@pytest.fixture(scope="session")
def line1():
    return BundleSpec(1, 1, "E")


def l2_norm(geom, density):
    return float(np.sqrt(np.real(geom.quadrature(density))))
