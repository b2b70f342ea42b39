import pytest

from cryamabe.energy import YamabeProblem


@pytest.fixture(scope="session")
def prob8():
    return YamabeProblem.build(N=1, k=1.0, jmax=8)


@pytest.fixture(scope="session")
def prob6():
    return YamabeProblem.build(N=1, k=1.0, jmax=6)


@pytest.fixture(scope="session")
def prob4():
    return YamabeProblem.build(N=1, k=1.0, jmax=4)


@pytest.fixture(scope="session")
def prob_half():
    # shares the cached basis with prob6; only the constants differ
    return YamabeProblem.build(N=1, k=0.5, jmax=6)
