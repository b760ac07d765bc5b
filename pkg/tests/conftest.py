import numpy as np
import pytest

from otflow.construct import analyze_matrix, lattice_chart
from otflow.modelgeom import ModelParams

PLASTIC = np.array([[0, 1, 0], [0, 0, 1], [1, 1, 0]], dtype=object)
SUPERGOLDEN = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 1]], dtype=object)


@pytest.fixture(scope="session")
def plastic_structure():
    return analyze_matrix(PLASTIC)


@pytest.fixture(scope="session")
def chart8(plastic_structure):
    return lattice_chart(plastic_structure, 1.0, 8, 8)


@pytest.fixture(scope="session")
def chart_small(plastic_structure):
    return lattice_chart(plastic_structure, 1.0, 8, 4)


@pytest.fixture(scope="session")
def params11():
    return ModelParams(a=[1.0], b=[1.0])
