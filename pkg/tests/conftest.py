import numpy as np
import pytest
from fractions import Fraction

from nilwalk.algebra import abelian, filiform4, free_nilpotent, heisenberg3
from nilwalk.filtration import WeightFiltration
from nilwalk.measures import Dirac1D, Gaussian1D, ProductMeasure


@pytest.fixture(scope="session")
def heis():
    return heisenberg3()


@pytest.fixture(scope="session")
def heis_centered(heis):
    return WeightFiltration(heis, [0, 0, 0])


@pytest.fixture(scope="session")
def heis_drift_e1(heis):
    return WeightFiltration(heis, [1, 0, 0])


@pytest.fixture(scope="session")
def heis_gauss(heis):
    """Centered identity-covariance law in the two generating coordinates."""
    return ProductMeasure(heis, [Gaussian1D(), Gaussian1D(), Dirac1D(0.0)])


def rational_vector(rng, dim, denom=8, span=8):
    return tuple(Fraction(rng.randint(-span, span), denom) for _ in range(dim))
