import numpy as np
import pytest

from noonsim.source import DEFAULT_SIGMA, scenario_build

GRID = np.linspace(-2000.0, 2000.0, 21)
FAR = 1e5


@pytest.fixture
def grid():
    return GRID.copy()


@pytest.fixture
def scenario():
    def build(kind, **kw):
        kw.setdefault("separation", FAR)
        return scenario_build(kind, DEFAULT_SIGMA, **kw)

    return build
