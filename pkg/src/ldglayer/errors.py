"""The three reported errors of an LDG solution against an exact solution."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import PenaltyParams, SolutionTriple, _energy_parts
from .exceptions import ValidationError
from .fields import Integrator, TripleSamples, sample_exact
from .mesh import region_codes
from .problem import ProblemCoefficients
from .projection import project_triple
from .quadrature import DGSpace

REGIONS = ("Omega11", "Omega12", "Omega21", "Omega22")


@dataclass
class ErrorReport:
    l2_weighted: float
    energy: float
    supercloseness: float
    u_l2: float
    epsilon: float
    N: int
    k: int
    family: str | None
    per_region: dict[str, dict[str, float]] = field(default_factory=dict)

    def row(self) -> dict:
        return {"l2": self.l2_weighted, "sc": self.supercloseness, "energy": self.energy}


def _region_split(parts: dict, space: DGSpace, codes: np.ndarray) -> dict[str, float]:
    """Energy squared per region.

    Each vertical-edge term goes to the element on its right; the edge at
    ``x = 1`` and the top-edge terms go to the element on their inner side.
    """
    N = space.N
    per_elem = parts["volume"].copy().reshape(N, N)
    vert = parts["vertical"]  # [j, i], i = 0..N
    per_elem += vert[:, :N]
    per_elem[:, -1] += vert[:, N]
    per_elem[-1, :] += parts["top"]
    flat = per_elem.ravel()
    return {name: float(np.sum(flat[codes == c])) for name, c in zip(REGIONS, (11, 12, 21, 22))}


def _lnorm_elementwise(z: TripleSamples, coeffs: ProblemCoefficients, space: DGSpace):
    integ = Integrator(space)
    X, Y = space.element_grid()
    beta = np.broadcast_to(coeffs.reaction(X, Y), X.shape)
    return integ.volume(beta * z.v.vol ** 2 + (z.s.vol ** 2 + z.r.vol ** 2) / coeffs.epsilon)


def compute_errors(space: DGSpace, coeffs: ProblemCoefficients, pen: PenaltyParams,
                   W: SolutionTriple, exact, projection: SolutionTriple | None = None) -> ErrorReport:
    """Weighted-L2 and energy errors of ``w - W`` and the energy norm of ``Pi w - W``.

    ``projection`` may be supplied to reuse an already computed ``Pi w``.
    """
    if not math.isclose(exact.epsilon, coeffs.epsilon, rel_tol=1e-14):
        raise ValidationError(
            f"exact solution epsilon {exact.epsilon:g} does not match system epsilon "
            f"{coeffs.epsilon:g}"
        )
    pen = pen.resolve(coeffs.epsilon, allow_below_eps=True)
    if projection is None:
        pu, pp, pq = project_triple(space, exact)
        projection = SolutionTriple(space, pu.coeffs, pp.coeffs, pq.coeffs)
    err = sample_exact(space, exact) - W.samples()
    sc = (projection - W).samples()

    codes = region_codes(space.mesh)
    l2_el = _lnorm_elementwise(err, coeffs, space)
    err_parts = _energy_parts(err, coeffs, pen, space)
    sc_parts = _energy_parts(sc, coeffs, pen, space)
    energy = math.sqrt(sum(float(np.sum(v)) for v in err_parts.values()))
    superclose = math.sqrt(sum(float(np.sum(v)) for v in sc_parts.values()))

    integ = Integrator(space)
    u_l2 = math.sqrt(float(np.sum(integ.volume(err.v.vol ** 2))))

    e_reg = _region_split(err_parts, space, codes)
    s_reg = _region_split(sc_parts, space, codes)
    per_region = {}
    for name, c in zip(REGIONS, (11, 12, 21, 22)):
        per_region[name] = {
            "l2": math.sqrt(float(np.sum(l2_el[codes == c]))),
            "energy": math.sqrt(e_reg[name]),
            "sc": math.sqrt(s_reg[name]),
        }
    family = space.mesh.family
    return ErrorReport(
        l2_weighted=math.sqrt(float(np.sum(l2_el))),
        energy=energy,
        supercloseness=superclose,
        u_l2=u_l2,
        epsilon=coeffs.epsilon,
        N=space.N,
        k=space.degree,
        family=family,
        per_region=per_region,
    )
