from fractions import Fraction

import pytest

from rank1lab import build_tower, presets


@pytest.fixture(scope="session")
def hk_tower():
    return build_tower(presets.hk_plus1(), 9)


@pytest.fixture(scope="session")
def lam_tower():
    return build_tower(presets.hk_plus1_lambda(Fraction(1, 2)), 9)


@pytest.fixture(scope="session")
def iii1_tower():
    return build_tower(presets.type_iii1(Fraction(1, 2), Fraction(1, 3)), 8)


@pytest.fixture(scope="session")
def kakutani_tower():
    return build_tower(presets.kakutani(), 10)


@pytest.fixture(scope="session")
def chacon_tower():
    return build_tower(presets.chacon(), 7)
