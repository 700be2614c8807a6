import numpy as np
import pytest

from ldglayer.mesh import MeshParams, build_mesh
from ldglayer.problem import ManufacturedSolution, ProblemCoefficients
from ldglayer.quadrature import DGSpace


class PolynomialSolution:
    """u = x(1-x)y(1-y) with a = b = 1; p, q are Q^2 polynomials as well."""

    def __init__(self, epsilon=0.1):
        self.epsilon = epsilon

    def u(self, x, y):
        return x * (1 - x) * y * (1 - y)

    def p(self, x, y):
        return self.epsilon * (1 - 2 * x) * y * (1 - y)

    def q(self, x, y):
        return self.epsilon * x * (1 - x) * (1 - 2 * y)

    def f(self, x, y):
        eps = self.epsilon
        lap = -2 * y * (1 - y) - 2 * x * (1 - x)
        return -eps * lap + (1 - 2 * x) * y * (1 - y) + self.u(x, y)

    def coefficients(self):
        one = lambda x, y: np.ones_like(np.asarray(x + y, dtype=float))
        zero = lambda x, y: np.zeros_like(np.asarray(x + y, dtype=float))
        return ProblemCoefficients(a=one, a_x=zero, b=one, f=self.f, epsilon=self.epsilon)


def make_space(N=8, k=1, eps=1e-8, family="shishkin", sigma=None, quad_order=5):
    sigma = k + 2 if sigma is None else sigma
    return DGSpace(build_mesh(MeshParams(eps, N, sigma, family=family)), k, quad_order)


@pytest.fixture
def poly():
    return PolynomialSolution()


@pytest.fixture
def model():
    return ManufacturedSolution(1e-8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
