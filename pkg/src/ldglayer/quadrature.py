"""Gauss-Legendre rules and the scaled Legendre tensor basis.

On an element ``K = I x J`` with sizes ``hx, hy`` the local basis is

    phi_(mx, my)(x, y) = l_mx(x) * l_my(y),   l_m = sqrt(2/h) * psi_m(t),

where ``psi_m = sqrt((2m+1)/2) P_m`` is orthonormal on [-1, 1] and ``t`` is
the reference coordinate.  The basis is L2-orthonormal on every element.
Local indices run x-fastest: ``l = my * (k + 1) + mx``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exceptions import ValidationError
from .mesh import TensorMesh

DEFAULT_QUAD_ORDER = 5


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.points.size

    def integrate(self, f, a: float = -1.0, b: float = 1.0) -> float:
        """Integrate ``f`` over ``[a, b]`` with the mapped rule."""
        half = 0.5 * (b - a)
        x = 0.5 * (a + b) + half * self.points
        return half * float(np.dot(self.weights, f(x)))


def _legendre_with_deriv(n: int, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_prev, p = np.ones_like(t), t.copy()
    for j in range(2, n + 1):
        p_prev, p = p, ((2 * j - 1) * t * p - (j - 1) * p_prev) / j
    return p, n * (t * p - p_prev) / (t * t - 1.0)


@lru_cache(maxsize=None)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    m = (n + 1) // 2
    # Tricomi's initial guesses for the m nonnegative roots, descending
    t = np.cos(np.pi * (np.arange(1, m + 1) - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_with_deriv(n, t)
        step = p / dp
        t = t - step
        if np.max(np.abs(step)) < 1e-15:
            break
    _, dp = _legendre_with_deriv(n, t)
    w = 2.0 / ((1.0 - t * t) * dp * dp)
    if n % 2:
        t[-1] = 0.0
    pts = np.concatenate([-t, t[::-1][n % 2:]])
    wts = np.concatenate([w, w[::-1][n % 2:]])
    for arr in (pts, wts):
        arr.setflags(write=False)
    return pts, wts


def gauss_legendre(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1] (exact to degree 2n - 1)."""
    if int(n) != n or not 1 <= n <= 20:
        raise ValidationError(f"quadrature order must be in 1..20, got {n}")
    pts, wts = _gauss_legendre(int(n))
    return QuadratureRule(pts, wts)


def legendre_eval(k: int, t) -> np.ndarray:
    """Values ``P_0(t), ..., P_k(t)`` stacked along the last axis."""
    t = np.asarray(t, dtype=float)
    assert np.all(np.abs(t) <= 1.0 + 1e-12), "Legendre argument outside [-1, 1]"
    out = np.empty(t.shape + (k + 1,))
    out[..., 0] = 1.0
    if k >= 1:
        out[..., 1] = t
    for n in range(2, k + 1):
        out[..., n] = ((2 * n - 1) * t * out[..., n - 1] - (n - 1) * out[..., n - 2]) / n
    return out


def legendre_deriv(k: int, t) -> np.ndarray:
    """Derivatives ``P_0'(t), ..., P_k'(t)``, via P'_n = n P_{n-1} + t P'_{n-1}."""
    t = np.asarray(t, dtype=float)
    vals = legendre_eval(k, t)
    out = np.zeros(t.shape + (k + 1,))
    for n in range(1, k + 1):
        out[..., n] = n * vals[..., n - 1] + t * out[..., n - 1]
    return out


def orthonormal_scale(k: int) -> np.ndarray:
    return np.sqrt((2.0 * np.arange(k + 1) + 1.0) / 2.0)


def psi(k: int, t) -> np.ndarray:
    """Reference basis ``psi_m(t)``, orthonormal on [-1, 1]."""
    return legendre_eval(k, t) * orthonormal_scale(k)


def dpsi(k: int, t) -> np.ndarray:
    return legendre_deriv(k, t) * orthonormal_scale(k)


@dataclass(frozen=True)
class DGSpace:
    """Discontinuous ``Q^k`` space on a tensor mesh.

    Holds reference tables sampled at the Gauss points of ``quad_order``.
    """

    mesh: TensorMesh
    degree: int
    quad_order: int = DEFAULT_QUAD_ORDER
    rule: QuadratureRule = field(init=False, repr=False)
    B: np.ndarray = field(init=False, repr=False)
    dB: np.ndarray = field(init=False, repr=False)
    right: np.ndarray = field(init=False, repr=False)
    left: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise ValidationError(f"degree must be a nonnegative integer, got {self.degree}")
        rule = gauss_legendre(self.quad_order)
        k = int(self.degree)
        object.__setattr__(self, "degree", k)
        object.__setattr__(self, "rule", rule)
        # B[q, m] = psi_m(t_q); right/left are psi_m(+1)/psi_m(-1)
        object.__setattr__(self, "B", psi(k, rule.points))
        object.__setattr__(self, "dB", dpsi(k, rule.points))
        object.__setattr__(self, "right", psi(k, 1.0))
        object.__setattr__(self, "left", psi(k, -1.0))

    @property
    def N(self) -> int:
        return self.mesh.N

    @property
    def n1(self) -> int:
        return self.degree + 1

    @property
    def dofs_per_element(self) -> int:
        return self.n1 ** 2

    @property
    def n_elements(self) -> int:
        return self.mesh.n_elements

    def quad_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical Gauss points per cell: ``xq[i, q]`` and ``yq[j, q]``."""
        t = self.rule.points
        m = self.mesh
        xq = 0.5 * (m.x[:-1] + m.x[1:])[:, None] + 0.5 * m.hx[:, None] * t[None, :]
        yq = 0.5 * (m.y[:-1] + m.y[1:])[:, None] + 0.5 * m.hy[:, None] * t[None, :]
        return xq, yq

    def element_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Gauss points of every element, shape ``(E, nq, nq)`` indexed ``[e, qy, qx]``."""
        xq, yq = self.quad_points()
        N, nq = self.N, self.quad_order
        X = np.broadcast_to(xq[None, :, None, :], (N, N, nq, nq)).reshape(N * N, nq, nq)
        Y = np.broadcast_to(yq[:, None, :, None], (N, N, nq, nq)).reshape(N * N, nq, nq)
        return X, Y

    def scale(self) -> np.ndarray:
        """Per-element normalisation ``2 / sqrt(hx * hy)``."""
        hx, hy = self.mesh.element_sizes()
        return 2.0 / np.sqrt(hx * hy)


def eval_basis(space: DGSpace, element: tuple[int, int], x: float, y: float,
               what: str = "value") -> np.ndarray:
    """Values (or physical x/y derivatives) of all local basis functions.

    ``element`` is the 1-based pair ``(i, j)``; the result has length
    ``(k+1)**2`` in x-fastest order.
    """
    i, j = element
    m = space.mesh
    if not (1 <= i <= m.N and 1 <= j <= m.N):
        raise ValidationError(f"element {element} outside the mesh")
    x0, x1, y0, y1 = m.x[i - 1], m.x[i], m.y[j - 1], m.y[j]
    if not (x0 <= x <= x1 and y0 <= y <= y1):
        raise ValidationError(f"point ({x}, {y}) is not inside element {element}")
    hx, hy = x1 - x0, y1 - y0
    tx = min(1.0, max(-1.0, (2.0 * x - x0 - x1) / hx))
    ty = min(1.0, max(-1.0, (2.0 * y - y0 - y1) / hy))
    k = space.degree
    fx, fy = psi(k, tx), psi(k, ty)
    if what == "dx":
        fx = dpsi(k, tx) * (2.0 / hx)
    elif what == "dy":
        fy = dpsi(k, ty) * (2.0 / hy)
    elif what != "value":
        raise ValidationError(f"unknown basis quantity {what!r}")
    return (2.0 / math.sqrt(hx * hy)) * np.outer(fy, fx).ravel()
