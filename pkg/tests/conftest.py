import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ethlab.operators import HamiltonianSpec
from ethlab.spectral import diagonalize_system

# the disorder realization used by the qutrit acceptance runs and recipes
QUTRIT_SEED = 3


@pytest.fixture(scope="session")
def qubit_l10_spectra():
    return diagonalize_system(HamiltonianSpec(kind="qubit", L=10))


@pytest.fixture(scope="session")
def qutrit_l8_spec():
    return HamiltonianSpec(kind="qutrit", L=8, a=1.0, seed=QUTRIT_SEED)


@pytest.fixture(scope="session")
def qutrit_l8_spectra(qutrit_l8_spec):
    return diagonalize_system(qutrit_l8_spec)


@pytest.fixture(scope="session")
def qubit_l6_spectra():
    return diagonalize_system(HamiltonianSpec(kind="qubit", L=6))
