import numpy as np
import pytest

from tecsim import build_box_mesh


@pytest.fixture
def unit_cube():
    return build_box_mesh((1.0, 1.0, 1.0), (1, 1, 1))


@pytest.fixture
def box_mesh():
    """A 10 nm cube at moderate resolution."""
    return build_box_mesh((1e-8, 1e-8, 1e-8), (4, 4, 8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
