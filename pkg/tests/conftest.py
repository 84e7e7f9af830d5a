import pytest

from qdexciton.exciton import solve_exciton
from qdexciton.materials import Numerics, cds_hgs_device


@pytest.fixture(scope="session")
def demo_device():
    """CdS/HgS/CdS structure at a = b/2."""
    return cds_hgs_device()


@pytest.fixture(scope="session")
def ci_half(demo_device):
    """Full-default CI solve at a/b = 0.5, shared by the slower tests."""
    return solve_exciton(demo_device, Numerics())
