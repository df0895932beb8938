import numpy as np
import pytest

from vism.grid import Molecule
from vism.physics import LJParams, PhysicalParams


@pytest.fixture
def single_atom():
    return Molecule([[0.0, 0.0, 0.0]], [0.0], [2.0], ["c"])


@pytest.fixture
def charged_atom():
    return Molecule([[0.0, 0.0, 0.0]], [1.0], [2.0], ["c"])


@pytest.fixture
def diatomic():
    """Neutral two-atom toy used across the convergence studies."""
    return Molecule(
        [[-1.2, 0.0, 0.0], [1.2, 0.0, 0.0]], [0.0, 0.0], [1.8, 1.8], ["c", "c"]
    )


@pytest.fixture
def charged_diatomic():
    return Molecule(
        [[-1.2, 0.0, 0.0], [1.2, 0.0, 0.0]], [0.3, -0.3], [1.8, 1.8], ["c", "c"]
    )


@pytest.fixture
def toy_lj():
    return LJParams({"c": (0.15, 2.8)})


@pytest.fixture
def toy_params(toy_lj):
    return PhysicalParams(lj=toy_lj)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
