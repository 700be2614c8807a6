"""Sampling of discrete and exact fields at quadrature points and edge traces.

Every norm in the package is a weighted sum over three kinds of samples:

* ``vol[e, qy, qx]`` -- element Gauss points,
* ``vx_minus/vx_plus[j, i, q]`` -- traces from the left/right on the vertical
  line ``x = x_i`` (``i = 0..N``), at the Gauss points of ``J_{j+1}``,
* ``hy_minus/hy_plus[j, i, q]`` -- traces from below/above on the horizontal
  line ``y = y_j`` (``j = 0..N``), at the Gauss points of ``I_{i+1}``.

Traces from outside the domain are zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import DGSpace, psi


@dataclass
class Samples:
    vol: np.ndarray
    vx_minus: np.ndarray
    vx_plus: np.ndarray
    hy_minus: np.ndarray
    hy_plus: np.ndarray

    def __sub__(self, other: Samples) -> Samples:
        return Samples(*(a - b for a, b in zip(self._parts(), other._parts())))

    def __add__(self, other: Samples) -> Samples:
        return Samples(*(a + b for a, b in zip(self._parts(), other._parts())))

    def __mul__(self, c: float) -> Samples:
        return Samples(*(c * a for a in self._parts()))

    __rmul__ = __mul__

    def _parts(self):
        return (self.vol, self.vx_minus, self.vx_plus, self.hy_minus, self.hy_plus)

    @property
    def vx_jump(self) -> np.ndarray:
        return self.vx_plus - self.vx_minus

    @property
    def hy_jump(self) -> np.ndarray:
        return self.hy_plus - self.hy_minus


class DGFunction:
    """A function of the DG space given by its coefficients ``(E, (k+1)**2)``."""

    def __init__(self, space: DGSpace, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        shape = (space.n_elements, space.dofs_per_element)
        if coeffs.shape != shape:
            raise ValueError(f"coefficient array has shape {coeffs.shape}, expected {shape}")
        self.space = space
        self.coeffs = coeffs

    def _grid(self) -> np.ndarray:
        n1 = self.space.n1
        return (self.coeffs * self.space.scale()[:, None]).reshape(-1, n1, n1)

    def samples(self) -> Samples:
        sp = self.space
        N, nq = sp.N, sp.quad_order
        C = self._grid()  # [e, my, mx]
        B = sp.B
        vol = np.einsum("emn,am,bn->eab", C, B, B, optimize=True)
        right = np.einsum("emn,n,am->ea", C, sp.right, B).reshape(N, N, nq)
        left = np.einsum("emn,n,am->ea", C, sp.left, B).reshape(N, N, nq)
        top = np.einsum("emn,m,an->ea", C, sp.right, B).reshape(N, N, nq)
        bottom = np.einsum("emn,m,an->ea", C, sp.left, B).reshape(N, N, nq)
        vx_minus = np.zeros((N, N + 1, nq))
        vx_plus = np.zeros((N, N + 1, nq))
        vx_minus[:, 1:] = right
        vx_plus[:, :-1] = left
        hy_minus = np.zeros((N + 1, N, nq))
        hy_plus = np.zeros((N + 1, N, nq))
        hy_minus[1:] = top
        hy_plus[:-1] = bottom
        return Samples(vol, vx_minus, vx_plus, hy_minus, hy_plus)

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        m = self.space.mesh
        N, k = m.N, self.space.degree
        i = np.clip(np.searchsorted(m.x, x, side="right") - 1, 0, N - 1)
        j = np.clip(np.searchsorted(m.y, y, side="right") - 1, 0, N - 1)
        tx = np.clip((2.0 * x - m.x[i] - m.x[i + 1]) / m.hx[i], -1.0, 1.0)
        ty = np.clip((2.0 * y - m.y[j] - m.y[j + 1]) / m.hy[j], -1.0, 1.0)
        e = j * N + i
        C = self._grid()[e]
        return np.einsum("...mn,...m,...n->...", C, psi(k, ty), psi(k, tx))


def edge_points(space: DGSpace):
    """Physical points of the vertical and horizontal edge samples.

    Returns ``(vx_x, vx_y, hy_x, hy_y)`` broadcastable to the trace shapes.
    """
    xq, yq = space.quad_points()
    m = space.mesh
    vx_x = m.x[None, :, None]
    vx_y = yq[:, None, :]
    hy_x = xq[None, :, :]
    hy_y = m.y[:, None, None]
    return vx_x, vx_y, hy_x, hy_y


def sample_callable(space: DGSpace, f) -> Samples:
    """Samples of a globally continuous function ``f(x, y)``."""
    N, nq = space.N, space.quad_order
    X, Y = space.element_grid()
    vol = np.broadcast_to(f(X, Y), X.shape).astype(float)
    vx_x, vx_y, hy_x, hy_y = edge_points(space)
    vx = np.broadcast_to(f(vx_x, vx_y), (N, N + 1, nq)).astype(float)
    hy = np.broadcast_to(f(hy_x, hy_y), (N + 1, N, nq)).astype(float)
    vx_minus, vx_plus = vx.copy(), vx.copy()
    vx_minus[:, 0] = 0.0
    vx_plus[:, -1] = 0.0
    hy_minus, hy_plus = hy.copy(), hy.copy()
    hy_minus[0] = 0.0
    hy_plus[-1] = 0.0
    return Samples(vol, vx_minus, vx_plus, hy_minus, hy_plus)


@dataclass
class TripleSamples:
    """Samples of a triple ``(v, s, r)``."""

    v: Samples
    s: Samples
    r: Samples

    def __sub__(self, other: TripleSamples) -> TripleSamples:
        return TripleSamples(self.v - other.v, self.s - other.s, self.r - other.r)


def sample_exact(space: DGSpace, exact) -> TripleSamples:
    """Sample an object exposing ``u``, ``p``, ``q`` callables."""
    return TripleSamples(sample_callable(space, exact.u),
                         sample_callable(space, exact.p),
                         sample_callable(space, exact.q))


class Integrator:
    """Quadrature weights for volume and edge integrals on a space."""

    def __init__(self, space: DGSpace):
        self.space = space
        w = space.rule.weights
        m = space.mesh
        hx, hy = m.element_sizes()
        self.vol = (0.25 * hx * hy)[:, None, None] * w[None, :, None] * w[None, None, :]
        # vertical edges: [j, i, q], length hy_j
        self.vx = (0.5 * m.hy)[:, None, None] * w[None, None, :] * np.ones((1, m.N + 1, 1))
        # horizontal edges: [j, i, q], length hx_i
        self.hy = (0.5 * m.hx)[None, :, None] * w[None, None, :] * np.ones((m.N + 1, 1, 1))

    def volume(self, g: np.ndarray) -> np.ndarray:
        """Per-element integrals of sampled ``g``."""
        return np.sum(self.vol * g, axis=(1, 2))
