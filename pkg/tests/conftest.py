import pytest

from services.flow import ShootingPoint
from services.model import ProblemParams
from services.solver import polish_point

# Published six-digit solutions for N=3, m=1, r0=2.
EXAMPLE_1 = ShootingPoint(a=0.581722, b=0.81081, u=1.96752, T=6.53474)
EXAMPLE_2 = ShootingPoint(a=1.37168, b=0.717282, u=1.73494, T=6.95831)


@pytest.fixture(scope="session")
def params():
    return ProblemParams(N=3, m=1.0, r0=2.0)


@pytest.fixture(scope="session")
def example_1():
    return EXAMPLE_1


@pytest.fixture(scope="session")
def example_2():
    return EXAMPLE_2


def _polish(params, point):
    a, u, T, _ = polish_point(params, point.b, (point.a, point.u, point.T))
    return ShootingPoint(a=a, b=point.b, u=u, T=T)


@pytest.fixture(scope="session")
def polished_1(params):
    return _polish(params, EXAMPLE_1)


@pytest.fixture(scope="session")
def polished_2(params):
    return _polish(params, EXAMPLE_2)
