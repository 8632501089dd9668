import pytest

from vcselnn.encoder import Grid
from vcselnn.optics import ReservoirParams, VcselSystem


@pytest.fixture(scope="session")
def default_system():
    """Full-size system at documented defaults; building it costs ~1 s once."""
    return VcselSystem(Grid(), ReservoirParams(seed=0), ring_fraction=0.5)
