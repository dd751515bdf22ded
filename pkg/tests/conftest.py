import pytest

from frobcube.instances import build_soergel, build_univariate


@pytest.fixture(scope="session")
def univariate():
    return build_univariate()


@pytest.fixture(scope="session")
def soergel2():
    return build_soergel(2)


@pytest.fixture(scope="session")
def soergel3():
    return build_soergel(3)


@pytest.fixture(scope="session")
def soergel4():
    return build_soergel(4)
