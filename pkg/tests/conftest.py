from fractions import Fraction

import pytest

import pyefc.schema.define as define
from pyefc.schema.measure import Characteristics

HALF = Fraction(1, 2)


@pytest.fixture
def two_state_chars() -> Characteristics:
    """Kingman coalescence against the binary dislocation (1/2, 1/2), exact."""
    return define.characteristics(c_k=1, nu_disl=[(1, (HALF, HALF))])


@pytest.fixture
def erosion_kingman_chars() -> Characteristics:
    return define.characteristics(c_e=1, c_k=1)


@pytest.fixture
def exact_mixed_chars() -> Characteristics:
    """Every mechanism at once, with rational parameters."""
    return define.characteristics(c_e=Fraction(1, 3), c_k=Fraction(1, 2),
                                  nu_disl=[(1, (HALF, HALF)), (Fraction(1, 4), (Fraction(3, 5), Fraction(1, 5)))],
                                  nu_coag=[(2, (Fraction(3, 10),)), (1, (Fraction(1, 3), Fraction(1, 3)))])


@pytest.fixture
def mixed_chars() -> Characteristics:
    return define.characteristics(c_e=0.5, c_k=1.0, nu_disl=[(1.0, (0.5, 0.5)), (0.5, (0.6, 0.2))],
                                  nu_coag=[(2.0, (0.3,))])


@pytest.fixture
def logistic_chars() -> Characteristics:
    return define.characteristics(c_k=2, nu_disl=[(1, (HALF, HALF)), (Fraction(1, 4), (Fraction(2, 5),
                                                                                        Fraction(3, 10),
                                                                                        Fraction(3, 10)))])


@pytest.fixture
def dust_chars() -> Characteristics:
    return define.characteristics(c_e=0.5, nu_disl=[(1.0, (0.5, 0.5))], nu_coag=[(1.0, (0.5,))])
