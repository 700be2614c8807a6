"""Local L2 and Gauss-Radau projections, 1D and tensor-product 2D.

In 1D on an interval ``I`` the projections of ``f`` into ``P^k(I)`` are

* ``l2``          -- all ``k+1`` moments match,
* ``radau_minus`` -- the first ``k`` moments match and ``pf = f`` at the right end,
* ``radau_plus``  -- the first ``k`` moments match and ``pf = f`` at the left end.

With an orthonormal basis the moment equations are diagonal, so each
projection is a small linear map from samples of ``f`` (Gauss points plus
the collocation endpoint) to coefficients.  The 2D projections are tensor
products of these maps:

    pi_minus   = radau_minus (x) radau_minus
    pi_x_plus  = radau_plus  (x) l2
    pi_y_plus  = l2          (x) radau_plus
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .fields import DGFunction, Integrator, Samples, TripleSamples, sample_exact
from .mesh import region_codes
from .quadrature import DEFAULT_QUAD_ORDER, DGSpace, gauss_legendre, psi

KINDS_1D = ("l2", "radau_minus", "radau_plus")
KINDS_2D = ("pi_minus", "pi_x_plus", "pi_y_plus")

_KIND_ALIASES = {
    "l2": "l2", "pi": "l2",
    "radau_minus": "radau_minus", "radauminus": "radau_minus", "minus": "radau_minus",
    "radau_plus": "radau_plus", "radauplus": "radau_plus", "plus": "radau_plus",
    "pi_minus": "pi_minus", "piminus": "pi_minus",
    "pi_x_plus": "pi_x_plus", "pixplus": "pi_x_plus",
    "pi_y_plus": "pi_y_plus", "piyplus": "pi_y_plus",
}

_TENSOR = {
    # (x-direction kind, y-direction kind)
    "pi_minus": ("radau_minus", "radau_minus"),
    "pi_x_plus": ("radau_plus", "l2"),
    "pi_y_plus": ("l2", "radau_plus"),
}


def _kind(name: str) -> str:
    try:
        return _KIND_ALIASES[name.lower().replace("-", "_")]
    except KeyError:
        raise ValidationError(f"unknown projection kind {name!r}") from None


def reference_operator(kind: str, k: int, quad_order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """Map from samples to reference coefficients on [-1, 1].

    Samples are ``f(t_1), ..., f(t_n), f(endpoint)``; the result ``R`` has
    shape ``(k+1, n+1)`` and ``R @ samples`` gives coefficients of
    ``sum_m c_m psi_m``.  The endpoint column is zero for ``l2``.
    """
    kind = _kind(kind)
    rule = gauss_legendre(quad_order)
    n = rule.n
    B = psi(k, rule.points)  # [q, m]
    R = np.zeros((k + 1, n + 1))
    R[:, :n] = (B * rule.weights[:, None]).T
    if kind == "l2":
        return R
    end = psi(k, 1.0 if kind == "radau_minus" else -1.0)
    # collocation row replaces the top moment: c_k = (f(end) - sum_{m<k} c_m psi_m(end)) / psi_k(end)
    R[k, :] = 0.0
    R[k, n] = 1.0
    R[k, :] -= end[:k] @ R[:k, :]
    R[k, :] /= end[k]
    return R


def project_1d(kind: str, k: int, interval: tuple[float, float], f,
               quad_order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """Coefficients of the projection of ``f`` in the orthonormal basis of ``interval``.

    The basis is ``sqrt(2/h) * psi_m`` of the mapped coordinate; use
    :func:`eval_1d` to evaluate the result.
    """
    a, b = map(float, interval)
    if not b > a:
        raise ValidationError(f"degenerate interval {interval}")
    kind = _kind(kind)
    if kind not in KINDS_1D:
        raise ValidationError(f"{kind!r} is not a 1D projection")
    rule = gauss_legendre(quad_order)
    h = b - a
    xs = 0.5 * (a + b) + 0.5 * h * rule.points
    end = b if kind == "radau_minus" else a
    tail = float(np.ravel(f(end))[0]) if kind != "l2" else 0.0
    samples = np.append(np.asarray(f(xs), dtype=float), tail)
    return math.sqrt(0.5 * h) * (reference_operator(kind, k, quad_order) @ samples)


def eval_1d(coeffs, interval: tuple[float, float], x) -> np.ndarray:
    a, b = interval
    h = b - a
    t = (2.0 * np.asarray(x, dtype=float) - a - b) / h
    k = len(coeffs) - 1
    return math.sqrt(2.0 / h) * psi(k, t) @ np.asarray(coeffs)


class ProjectedField(DGFunction):
    """Coefficients of a 2D projection; ``kind`` records which one."""

    def __init__(self, space: DGSpace, coeffs, kind: str):
        super().__init__(space, coeffs)
        self.kind = kind


def _axis_samples(nodes: np.ndarray, pts: np.ndarray, kind: str) -> np.ndarray:
    """Sample locations per cell: Gauss points plus the collocation endpoint."""
    h = np.diff(nodes)
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    s = np.empty((h.size, pts.size + 1))
    s[:, :-1] = mid[:, None] + 0.5 * h[:, None] * pts[None, :]
    if kind == "radau_minus":
        s[:, -1] = nodes[1:]
    elif kind == "radau_plus":
        s[:, -1] = nodes[:-1]
    else:
        s[:, -1] = mid  # unused by l2 (zero column)
    return s


def project_2d(kind: str, space: DGSpace, f) -> ProjectedField:
    """Tensor-product projection of ``f(x, y)`` into the DG space."""
    kind = _kind(kind)
    if kind not in KINDS_2D:
        raise ValidationError(f"{kind!r} is not a 2D projection")
    kx, ky = _TENSOR[kind]
    k, nq = space.degree, space.quad_order
    m = space.mesh
    pts = space.rule.points
    Rx = reference_operator(kx, k, nq)
    Ry = reference_operator(ky, k, nq)
    sx = _axis_samples(m.x, pts, kx)  # [i, b]
    sy = _axis_samples(m.y, pts, ky)  # [j, a]
    F = np.asarray(f(sx[None, :, None, :], sy[:, None, :, None]), dtype=float)
    F = np.broadcast_to(F, (m.N, m.N, nq + 1, nq + 1))  # [j, i, a, b]
    C = np.einsum("ma,nb,jiab->jimn", Ry, Rx, F, optimize=True)
    hx, hy = m.element_sizes()
    coeffs = C.reshape(m.n_elements, -1) * (0.5 * np.sqrt(hx * hy))[:, None]
    return ProjectedField(space, coeffs, kind)


def project_triple(space: DGSpace, exact):
    """``(pi_minus u, pi_x_plus p, pi_y_plus q)`` of an exact solution."""
    return (project_2d("pi_minus", space, exact.u),
            project_2d("pi_x_plus", space, exact.p),
            project_2d("pi_y_plus", space, exact.q))


@dataclass
class ProjectionErrorReport:
    """Measured left-hand sides of the projection-error bounds.

    ``eta_*`` denote ``w - Pi w`` for ``w = (u, p, q)``.
    """

    N: int
    k: int
    epsilon: float
    eta_u: float
    eta_u_layer: float
    eta_u_vertical_max: float
    eta_u_vertical_lines: np.ndarray
    eta_u_vertical_total: float
    eta_u_jump: float
    eta_u_right: float
    eta_u_top: float
    eta_p_scaled: float
    eta_q_scaled: float
    eta_p_right: float
    eta_q_top: float

    QUANTITIES = ("eta_u", "eta_u_layer", "eta_u_vertical_max", "eta_u_vertical_total",
                  "eta_u_jump", "eta_u_right", "eta_u_top", "eta_p_scaled",
                  "eta_q_scaled", "eta_p_right", "eta_q_top")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.QUANTITIES}


def projection_error_report(space: DGSpace, exact) -> ProjectionErrorReport:
    """Norms of ``eta = w - Pi w`` on volumes, vertical lines and the outflow edges."""
    eps = exact.epsilon
    pu, pp, pq = project_triple(space, exact)
    eta = sample_exact(space, exact) - TripleSamples(pu.samples(), pp.samples(), pq.samples())
    integ = Integrator(space)
    N = space.N

    def l2(g: np.ndarray, mask=None) -> float:
        per = integ.volume(g * g)
        if mask is not None:
            per = per[mask]
        return math.sqrt(float(np.sum(per)))

    layer = np.isin(region_codes(space.mesh), (21, 22))
    u: Samples = eta.v
    # sum over j of ||(eta_u)^-_{i,y}||^2 on J_j, for i = 0..N
    vertical = np.sqrt(np.sum(integ.vx * u.vx_minus ** 2, axis=(0, 2)))[1:]
    jump = math.sqrt(float(np.sum(integ.vx * u.vx_jump ** 2)))
    return ProjectionErrorReport(
        N=N, k=space.degree, epsilon=eps,
        eta_u=l2(u.vol),
        eta_u_layer=l2(u.vol, layer),
        eta_u_vertical_max=float(vertical.max()),
        eta_u_vertical_lines=vertical,
        eta_u_vertical_total=float(np.sqrt(np.sum(vertical ** 2))),
        eta_u_jump=jump,
        eta_u_right=float(vertical[-1]),
        eta_u_top=math.sqrt(float(np.sum(integ.hy[-1] * u.hy_minus[-1] ** 2))),
        eta_p_scaled=l2(eta.s.vol) / math.sqrt(eps),
        eta_q_scaled=l2(eta.r.vol) / math.sqrt(eps),
        eta_p_right=math.sqrt(float(np.sum(integ.vx[:, -1] * eta.s.vx_minus[:, -1] ** 2))),
        eta_q_top=math.sqrt(float(np.sum(integ.hy[-1] * eta.r.hy_minus[-1] ** 2))),
    )
