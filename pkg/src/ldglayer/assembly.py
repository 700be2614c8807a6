"""Assembly of the LDG system for ``(U, P, Q)`` and the scheme's norms.

For test functions ``z = (v, s, r)`` the bilinear form is ``B = T1 + T2 + T3 + T4``:

    T1 = eps^-1 [(P, s) + (Q, r)] + ((b - a_x) U, v)
    T2 = (U, s_x) + sum_int <U^-, [s]> + (U, r_y) + sum_int <U^-, [r]>
    T3 = (P, v_x) + sum_{i<N} <P^+, [v]> - <P^-, v^->|_{x=1}
         + (Q, v_y) + sum_{j<N} <Q^+, [v]> - <Q^-, v^->|_{y=1}
    T4 = -(a U, v_x) - sum_{i>=1} <a U^-, [v]> + lambda1 <U^-, v^->|_{x=1}
         + lambda2 <U^-, v^->|_{y=1}

with jumps ``[v] = v^+ - v^-`` and zero traces from outside the domain.
The unknowns are ordered element-major, fields interleaved per element:
``index = (3 * e + field) * (k+1)**2 + local``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import ValidationError
from .fields import DGFunction, Integrator, Samples, TripleSamples, edge_points
from .problem import ProblemCoefficients
from .quadrature import DGSpace

U, P, Q = 0, 1, 2
FIELDS = ("u", "p", "q")


@dataclass(frozen=True)
class PenaltyParams:
    lambda1: float = 0.0
    lambda2: float | None = None

    def resolve(self, epsilon: float, allow_below_eps: bool = False) -> PenaltyParams:
        """Fill the default ``lambda2 = eps`` and check ``lambda2 >= eps``."""
        lam2 = epsilon if self.lambda2 is None else float(self.lambda2)
        if self.lambda1 < 0:
            raise ValidationError(f"lambda1 must be nonnegative, got {self.lambda1}")
        if lam2 < 0:
            raise ValidationError(f"lambda2 must be nonnegative, got {lam2}")
        if lam2 < epsilon and not allow_below_eps:
            raise ValidationError(
                f"lambda2={lam2:g} is below epsilon={epsilon:g}; pass the explicit "
                "override to run outside the analysed parameter range"
            )
        return PenaltyParams(float(self.lambda1), lam2)


@dataclass
class SolutionTriple:
    """Coefficients of ``(U, P, Q)``, each of shape ``(E, (k+1)**2)``."""

    space: DGSpace
    u: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        shape = (self.space.n_elements, self.space.dofs_per_element)
        for name in FIELDS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValidationError(f"{name} coefficients have shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)

    @classmethod
    def from_vector(cls, space: DGSpace, x: np.ndarray) -> SolutionTriple:
        blocks = np.asarray(x).reshape(space.n_elements, 3, space.dofs_per_element)
        return cls(space, blocks[:, U].copy(), blocks[:, P].copy(), blocks[:, Q].copy())

    @classmethod
    def zeros(cls, space: DGSpace) -> SolutionTriple:
        shape = (space.n_elements, space.dofs_per_element)
        return cls(space, np.zeros(shape), np.zeros(shape), np.zeros(shape))

    def to_vector(self) -> np.ndarray:
        return np.stack([self.u, self.p, self.q], axis=1).ravel()

    def functions(self) -> tuple[DGFunction, DGFunction, DGFunction]:
        return (DGFunction(self.space, self.u), DGFunction(self.space, self.p),
                DGFunction(self.space, self.q))

    def samples(self) -> TripleSamples:
        return TripleSamples(*(f.samples() for f in self.functions()))

    def __sub__(self, other: SolutionTriple) -> SolutionTriple:
        return SolutionTriple(self.space, self.u - other.u, self.p - other.p, self.q - other.q)


@dataclass
class LDGSystem:
    matrix: sp.csc_matrix
    rhs: np.ndarray
    space: DGSpace
    coefficients: ProblemCoefficients
    penalty: PenaltyParams

    @property
    def n_dofs(self) -> int:
        return self.rhs.size

    def dof(self, field: str, element: int, local: int) -> int:
        """Global index of ``(field, element, local)``; ``element`` is the flat index."""
        nloc = self.space.dofs_per_element
        return (3 * element + FIELDS.index(field)) * nloc + local


class _Triplets:
    """Collects dense local blocks and their global placement."""

    def __init__(self, nloc: int):
        self.nloc = nloc
        self.rows, self.cols, self.vals = [], [], []
        base = np.arange(nloc)
        self._r = np.repeat(base, nloc)
        self._c = np.tile(base, nloc)

    def add(self, row_elem, row_field, col_elem, col_field, blocks):
        """``blocks[n, test, trial]`` placed at (row_elem[n], col_elem[n])."""
        row_elem = np.asarray(row_elem)
        col_elem = np.asarray(col_elem)
        blocks = np.broadcast_to(blocks, (row_elem.size, self.nloc, self.nloc))
        r0 = (3 * row_elem + row_field) * self.nloc
        c0 = (3 * col_elem + col_field) * self.nloc
        self.rows.append((r0[:, None] + self._r[None, :]).ravel())
        self.cols.append((c0[:, None] + self._c[None, :]).ravel())
        self.vals.append(np.ascontiguousarray(blocks).ravel())

    def matrix(self, n: int) -> sp.csc_matrix:
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals)
        return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()


def _check_finite(values: np.ndarray, X, Y, what: str):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise ValidationError(
            f"non-finite {what} at (x, y) = ({np.broadcast_to(X, values.shape)[tuple(idx)]:.17g}, "
            f"{np.broadcast_to(Y, values.shape)[tuple(idx)]:.17g})"
        )


def _sample(fn, X, Y, shape, what):
    vals = np.broadcast_to(np.asarray(fn(X, Y), dtype=float), shape)
    _check_finite(vals, X, Y, what)
    return vals


def assemble(coeffs: ProblemCoefficients, space: DGSpace, pen: PenaltyParams | None = None,
             allow_lambda2_below_eps: bool = False) -> LDGSystem:
    """Assemble the sparse LDG matrix and right-hand side."""
    eps = coeffs.epsilon
    pen = (pen or PenaltyParams()).resolve(eps, allow_lambda2_below_eps)
    k, n1, nloc = space.degree, space.n1, space.dofs_per_element
    N, nq, E = space.N, space.quad_order, space.n_elements
    mesh = space.mesh
    w = space.rule.weights
    B, dB, R, L = space.B, space.dB, space.right, space.left
    hx, hy = mesh.element_sizes()
    elems = np.arange(E)
    I1 = np.eye(n1)
    trip = _Triplets(nloc)

    X, Y = space.element_grid()
    shape = X.shape
    a_vol = _sample(coeffs.a, X, Y, shape, "a")
    ax_vol = _sample(coeffs.a_x, X, Y, shape, "a_x")
    b_vol = _sample(coeffs.b, X, Y, shape, "b")
    f_vol = _sample(coeffs.f, X, Y, shape, "f")

    # reference 1D tables
    Wq = w[:, None] * B  # [q, m]
    D = np.einsum("qa,qb->ab", w[:, None] * dB, B)  # int psi_a' psi_b

    def weighted_mass(c, x_test, x_trial):
        """sum_q w w c(q) Ty(q) Ty(q) Tx(q) Tx(q) as [e, (ay, ax), (by, bx)]."""
        M = np.einsum("eyx,xa,xb,yc,yd->ecadb", c, w[:, None] * x_test, x_trial, Wq, B,
                      optimize=True)
        return M.reshape(E, nloc, nloc)

    # T1 + volume part of T4 on (v, U)
    vu = weighted_mass(b_vol - ax_vol, B, B)
    vu -= (2.0 / hx)[:, None, None] * weighted_mass(a_vol, dB, B)
    trip.add(elems, U, elems, U, vu)
    # eps^-1 (P, s) and eps^-1 (Q, r): identity in the orthonormal basis
    ident = np.eye(nloc) / eps
    trip.add(elems, P, elems, P, ident[None])
    trip.add(elems, Q, elems, Q, ident[None])
    # (U, s_x), (P, v_x): test derivative in x; (U, r_y), (Q, v_y) in y
    Dx = np.kron(I1, D)
    Dy = np.kron(D, I1)
    dx_blocks = (2.0 / hx)[:, None, None] * Dx[None]
    dy_blocks = (2.0 / hy)[:, None, None] * Dy[None]
    trip.add(elems, P, elems, U, dx_blocks)
    trip.add(elems, U, elems, P, dx_blocks)
    trip.add(elems, Q, elems, U, dy_blocks)
    trip.add(elems, U, elems, Q, dy_blocks)

    vx_x, vx_y, hy_x, hy_y = edge_points(space)
    a_edge = _sample(coeffs.a, vx_x, vx_y, (N, N + 1, nq), "a on vertical edges")
    e_grid = elems.reshape(N, N)  # [j, i]

    def vblock(c, test_side, trial_side, h_test, h_trial):
        """Vertical-edge block for test/trial traces; c[n, q] on the edge."""
        My = np.einsum("nq,qa,qb->nab", c, Wq, B)
        Xs = np.outer(test_side, trial_side)
        blk = np.einsum("nab,cd->nacbd", My, Xs).reshape(-1, nloc, nloc)
        return blk * (2.0 / np.sqrt(h_test * h_trial))[:, None, None]

    def hblock(c, test_side, trial_side, h_test, h_trial):
        Mx = np.einsum("nq,qa,qb->nab", c, Wq, B)
        Ys = np.outer(test_side, trial_side)
        blk = np.einsum("cd,nab->ncadb", Ys, Mx).reshape(-1, nloc, nloc)
        return blk * (2.0 / np.sqrt(h_test * h_trial))[:, None, None]

    ones_v = np.ones((N, nq))
    hx1, hy1 = mesh.hx, mesh.hy

    # ---- vertical edges, interior i = 1..N-1: left element iL, right element iR
    if N > 1:
        Lft = e_grid[:, :-1].ravel()
        Rgt = e_grid[:, 1:].ravel()
        hL = np.tile(hx1[:-1], N)
        hR = np.tile(hx1[1:], N)
        one = np.ones((Lft.size, nq))
        a_int = a_edge[:, 1:-1].reshape(-1, nq)
        # T2: <U^-, s^+ - s^->
        trip.add(Rgt, P, Lft, U, vblock(one, L, R, hR, hL))
        trip.add(Lft, P, Lft, U, -vblock(one, R, R, hL, hL))
        # T3: <P^+, v^+ - v^->
        trip.add(Rgt, U, Rgt, P, vblock(one, L, L, hR, hR))
        trip.add(Lft, U, Rgt, P, -vblock(one, R, L, hL, hR))
        # T4: -<a U^-, v^+ - v^->
        trip.add(Rgt, U, Lft, U, -vblock(a_int, L, R, hR, hL))
        trip.add(Lft, U, Lft, U, vblock(a_int, R, R, hL, hL))
    # ---- x = 0 (i = 0): T3 <P^+, v^+>
    first = e_grid[:, 0]
    trip.add(first, U, first, P, vblock(ones_v, L, L, np.full(N, hx1[0]), np.full(N, hx1[0])))
    # ---- x = 1 (i = N): -<P^-, v^-> + <a U^-, v^-> + lambda1 <U^-, v^->
    last = e_grid[:, -1]
    hN = np.full(N, hx1[-1])
    trip.add(last, U, last, P, -vblock(ones_v, R, R, hN, hN))
    trip.add(last, U, last, U, vblock(a_edge[:, -1] + pen.lambda1, R, R, hN, hN))

    # ---- horizontal edges, interior j = 1..N-1: bottom element, top element
    ones_h = np.ones((N, nq))
    if N > 1:
        Bot = e_grid[:-1, :].ravel()
        Top = e_grid[1:, :].ravel()
        hB = np.repeat(hy1[:-1], N)
        hT = np.repeat(hy1[1:], N)
        one = np.ones((Bot.size, nq))
        trip.add(Top, Q, Bot, U, hblock(one, L, R, hT, hB))
        trip.add(Bot, Q, Bot, U, -hblock(one, R, R, hB, hB))
        trip.add(Top, U, Top, Q, hblock(one, L, L, hT, hT))
        trip.add(Bot, U, Top, Q, -hblock(one, R, L, hB, hT))
    bottom = e_grid[0, :]
    h0 = np.full(N, hy1[0])
    trip.add(bottom, U, bottom, Q, hblock(ones_h, L, L, h0, h0))
    top = e_grid[-1, :]
    hT1 = np.full(N, hy1[-1])
    trip.add(top, U, top, Q, -hblock(ones_h, R, R, hT1, hT1))
    if pen.lambda2 != 0.0:
        trip.add(top, U, top, U, hblock(pen.lambda2 * ones_h, R, R, hT1, hT1))

    n = 3 * E * nloc
    A = trip.matrix(n)
    # (f, v) = sqrt(hx hy)/2 sum w w f Psi
    Fv = np.einsum("eyx,ya,xb->eab", f_vol, Wq, Wq, optimize=True).reshape(E, nloc)
    Fv *= (0.5 * np.sqrt(hx * hy))[:, None]
    rhs = np.zeros((E, 3, nloc))
    rhs[:, U] = Fv
    return LDGSystem(A, rhs.ravel(), space, coeffs, pen)


# ---------------------------------------------------------------- norms

def _as_samples(z) -> TripleSamples:
    if isinstance(z, TripleSamples):
        return z
    if isinstance(z, SolutionTriple):
        return z.samples()
    raise TypeError(f"cannot sample {type(z).__name__}")


def _energy_parts(z: TripleSamples, coeffs: ProblemCoefficients, pen: PenaltyParams,
                  space: DGSpace) -> dict[str, np.ndarray]:
    """Per-element volume terms and per-edge jump terms of the energy norm squared."""
    eps = coeffs.epsilon
    integ = Integrator(space)
    X, Y = space.element_grid()
    beta = np.broadcast_to(coeffs.reaction(X, Y), X.shape)
    vol = integ.volume(beta * z.v.vol ** 2 + (z.s.vol ** 2 + z.r.vol ** 2) / eps)
    N, nq = space.N, space.quad_order
    vx_x, vx_y, _, _ = edge_points(space)
    a_edge = np.broadcast_to(coeffs.a(vx_x, vx_y), (N, N + 1, nq))
    jv = z.v.vx_jump
    vert = np.sum(integ.vx * 0.5 * a_edge * jv ** 2, axis=2)  # [j, i]
    vert[:, -1] += pen.lambda1 * np.sum(integ.vx[:, -1] * jv[:, -1] ** 2, axis=1)
    top = pen.lambda2 * np.sum(integ.hy[-1] * z.v.hy_jump[-1] ** 2, axis=1)  # [i]
    return {"volume": vol, "vertical": vert, "top": top}


def energy_norm(z, coeffs: ProblemCoefficients, pen: PenaltyParams,
                space: DGSpace | None = None) -> float:
    """The energy norm ``sqrt(B(z; z))`` evaluated from its definition.

    ``z`` is a :class:`SolutionTriple` or sampled triple (e.g. an error field).
    """
    if space is None:
        space = z.space
    pen = pen.resolve(coeffs.epsilon, allow_below_eps=True)
    parts = _energy_parts(_as_samples(z), coeffs, pen, space)
    total = sum(float(np.sum(v)) for v in parts.values())
    return math.sqrt(max(total, 0.0))


def weighted_l2_norm(z, coeffs: ProblemCoefficients, space: DGSpace | None = None) -> float:
    """``sqrt(eps^-1 ||s||^2 + eps^-1 ||r||^2 + ||(b - a_x/2)^(1/2) v||^2)``."""
    if space is None:
        space = z.space
    zs = _as_samples(z)
    integ = Integrator(space)
    X, Y = space.element_grid()
    beta = np.broadcast_to(coeffs.reaction(X, Y), X.shape)
    total = np.sum(integ.volume(beta * zs.v.vol ** 2 + (zs.s.vol ** 2 + zs.r.vol ** 2)
                                / coeffs.epsilon))
    return math.sqrt(float(total))


def sample_field(space: DGSpace, coeffs: np.ndarray) -> Samples:
    return DGFunction(space, coeffs).samples()
