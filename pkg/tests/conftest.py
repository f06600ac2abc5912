import pytest

from smoothpeano.cantor import CantorIndex
from smoothpeano.lune import default_lune
from smoothpeano.peano import build_curve
from smoothpeano.subdivision import build_family


@pytest.fixture(scope="session")
def fam():
    return build_family(default_lune(), depth=4)


@pytest.fixture(scope="session")
def idx(fam):
    return CantorIndex.from_family(fam)


@pytest.fixture(scope="session")
def curve(fam, idx):
    return build_curve(fam, idx)


@pytest.fixture(scope="session")
def small_fam():
    """A depth-3 family: enough for tests that enumerate nodes."""
    return build_family(default_lune(), depth=3)
