import pytest

import stategames as sg


@pytest.fixture(scope="session")
def ex9():
    return sg.example9()


@pytest.fixture(scope="session")
def ex9_lazy():
    return sg.example9_lazy()


@pytest.fixture(scope="session")
def ex4():
    return sg.example4()


@pytest.fixture(scope="session")
def ex12():
    return sg.example12()
