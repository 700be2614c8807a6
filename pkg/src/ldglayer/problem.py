"""Problem coefficients and the layered manufactured test problem.

The model problem is

    -eps * Lap(u) + (1+x)(1+y) u_x + (3/2 + y) u = f   on (0, 1)^2,  u = 0 on the boundary,

with the exact solution

    u = (sin(pi x / 2) - g(x)) * (1 + y^4) * Z(y),
    g(x) = (exp(-(1-x)/eps) - exp(-1/eps)) / (1 - exp(-1/eps)),
    Z(y) = (1 - exp(-y/s)) (1 - exp(-(1-y)/s)) / (1 - exp(-1/(2s)))^2,  s = sqrt(eps).

All ``1 - exp(-t)`` factors go through ``expm1``; exponentials of large
negative arguments and products of tiny layer terms flush to zero, which
is the correct limit, with numpy's underflow reporting silenced locally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import ValidationError
Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemCoefficients:
    """Data of ``-eps Lap u + a u_x + b u = f`` with homogeneous Dirichlet data.

    All callables take broadcastable arrays ``(x, y)``.
    """

    a: Field
    a_x: Field
    b: Field
    f: Field
    epsilon: float

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")

    def reaction(self, x, y):
        """``b - a_x / 2``, the weight of the L2 part of the energy norm."""
        return self.b(x, y) - 0.5 * self.a_x(x, y)


@dataclass(frozen=True)
class CoefficientReport:
    minimum: float
    location: tuple[float, float]
    alpha: float

    @property
    def satisfied(self) -> bool:
        return self.minimum > 0 and self.alpha > 0


def validate_coefficient_condition(coeffs: ProblemCoefficients, n: int = 101) -> CoefficientReport:
    """Sample ``b - a_x/2`` and ``a`` on an ``n x n`` grid of the closed square."""
    t = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(t, t, indexing="xy")
    beta = np.broadcast_to(coeffs.reaction(X, Y), X.shape)
    k = int(np.argmin(beta))
    alpha = float(np.min(np.broadcast_to(coeffs.a(X, Y), X.shape)))
    return CoefficientReport(float(beta.flat[k]), (float(X.flat[k]), float(Y.flat[k])), alpha)


def _check_domain(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any((x < 0) | (x > 1) | (y < 0) | (y > 1)):
        raise ValidationError("evaluation point outside the closed unit square")
    return x, y


class ManufacturedSolution:
    """Exact solution of the layered model problem for a given ``epsilon``."""

    def __init__(self, epsilon: float):
        if not (np.isfinite(epsilon) and epsilon > 0):
            raise ValidationError(f"epsilon must be positive, got {epsilon}")
        self.epsilon = float(epsilon)
        self._s = math.sqrt(self.epsilon)
        self._e1 = math.exp(-1.0 / self.epsilon)
        self._e01 = math.exp(-1.0 / self._s)  # exp(-y/s) * exp(-(1-y)/s)
        self._d1 = -math.expm1(-1.0 / self.epsilon)
        self._c2 = math.expm1(-0.5 / self._s) ** 2

    def __repr__(self):
        return f"ManufacturedSolution(epsilon={self.epsilon:g})"

    # x-factor: X = sin(pi x/2) - g(x); each helper returns eps^m * d^m X / dx^m
    @np.errstate(under="ignore")
    def _x_parts(self, x):
        eps = self.epsilon
        E = np.exp(-(1.0 - x) / eps)
        h = 0.5 * np.pi
        X = np.sin(h * x) - (E - self._e1) / self._d1
        epsX1 = eps * h * np.cos(h * x) - E / self._d1
        epsX2 = -eps * h * h * np.sin(h * x) - E / (eps * self._d1)
        return X, epsX1, epsX2

    @np.errstate(under="ignore")
    def _y_parts(self, y):
        s = self._s
        e0, e1 = np.exp(-y / s), np.exp(-(1.0 - y) / s)
        A, Bv = -np.expm1(-y / s), -np.expm1(-(1.0 - y) / s)
        c = self._c2
        Z = A * Bv / c
        sZ1 = (e0 * Bv - A * e1) / c
        ssZ2 = (-e0 * Bv - 2.0 * self._e01 - A * e1) / c
        w = 1.0 + y ** 4
        Y = w * Z
        # s * Y' and s^2 * Y''
        sY1 = 4.0 * y ** 3 * Z * s + w * sZ1
        ssY2 = 12.0 * y ** 2 * Z * s * s + 8.0 * y ** 3 * sZ1 * s + w * ssZ2
        return Y, sY1, ssY2

    def u(self, x, y):
        x, y = _check_domain(x, y)
        return self._x_parts(x)[0] * self._y_parts(y)[0]

    def u_x(self, x, y):
        x, y = _check_domain(x, y)
        return self._x_parts(x)[1] / self.epsilon * self._y_parts(y)[0]

    def u_y(self, x, y):
        x, y = _check_domain(x, y)
        return self._x_parts(x)[0] * self._y_parts(y)[1] / self._s

    def u_xx(self, x, y):
        x, y = _check_domain(x, y)
        return self._x_parts(x)[2] / self.epsilon * self._y_parts(y)[0]

    def u_yy(self, x, y):
        x, y = _check_domain(x, y)
        return self._x_parts(x)[0] * self._y_parts(y)[2] / self.epsilon

    def p(self, x, y):
        """``eps * u_x``."""
        x, y = _check_domain(x, y)
        return self._x_parts(x)[1] * self._y_parts(y)[0]

    def q(self, x, y):
        """``eps * u_y``."""
        x, y = _check_domain(x, y)
        return self._x_parts(x)[0] * self._y_parts(y)[1] * self._s

    @staticmethod
    def a(x, y):
        return (1.0 + x) * (1.0 + y)

    @staticmethod
    def a_x(x, y):
        return (1.0 + y) + 0.0 * x

    @staticmethod
    def b(x, y):
        return 1.5 + y + 0.0 * x

    @np.errstate(under="ignore")
    def f(self, x, y):
        x, y = _check_domain(x, y)
        X, epsX1, epsX2 = self._x_parts(x)
        Y, sY1, ssY2 = self._y_parts(y)
        # -eps u_xx - eps u_yy + a u_x + b u
        return (-epsX2 * Y - X * ssY2 + self.a(x, y) * epsX1 / self.epsilon * Y
                + self.b(x, y) * X * Y)

    def evaluate(self, which: str, x, y):
        if which not in ("u", "p", "q", "f"):
            raise ValidationError(f"unknown field {which!r}")
        return getattr(self, which)(x, y)

    def coefficients(self) -> ProblemCoefficients:
        return ProblemCoefficients(a=self.a, a_x=self.a_x, b=self.b, f=self.f,
                                   epsilon=self.epsilon)


def eval_exact(which: str, x, y, epsilon: float):
    """Evaluate ``u``, ``p``, ``q`` or ``f`` of the model problem."""
    return ManufacturedSolution(epsilon).evaluate(which, x, y)
