"""Layer-adapted tensor-product meshes on the unit square.

Three families are supported, all refined near the outflow side ``x = 1``
(exponential layer) and near ``y = 0`` and ``y = 1`` (characteristic layers):

* ``shishkin`` -- piecewise uniform,
* ``bs`` -- Bakhvalov-Shishkin, logarithmically graded fine part,
* ``bakhvalov`` -- Bakhvalov-type, graded with an epsilon-dependent generator.

Elements are numbered ``K_ij = (x_{i-1}, x_i) x (y_{j-1}, y_j)`` with
``1 <= i, j <= N``; their flat index is ``(j - 1) * N + (i - 1)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError

FAMILIES = ("shishkin", "bs", "bakhvalov")

_FAMILY_ALIASES = {
    "shishkin": "shishkin",
    "s": "shishkin",
    "bs": "bs",
    "bakhvalov-shishkin": "bs",
    "bakhvalovshishkin": "bs",
    "b": "bakhvalov",
    "bakhvalov": "bakhvalov",
}


def normalize_family(family: str) -> str:
    key = str(family).strip().lower().replace("_", "-")
    try:
        return _FAMILY_ALIASES[key]
    except KeyError:
        raise ValidationError(
            f"unknown mesh family {family!r}; expected one of {FAMILIES}"
        ) from None


class Region(enum.Enum):
    """Subdomain an element belongs to."""

    OMEGA11 = 11  # coarse in both directions
    OMEGA12 = 12  # characteristic layers
    OMEGA21 = 21  # exponential layer
    OMEGA22 = 22  # corner layers


@dataclass(frozen=True)
class MeshParams:
    epsilon: float
    N: int
    sigma: float
    alpha: float = 1.0
    delta: float = 1.4
    family: str = "shishkin"

    def __post_init__(self):
        object.__setattr__(self, "family", normalize_family(self.family))
        if int(self.N) != self.N or self.N < 4 or self.N % 4:
            raise ValidationError(f"N must be an integer >= 4 divisible by 4, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        for name in ("epsilon", "sigma", "alpha", "delta"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be positive and finite, got {value}")


def transition_params(p: MeshParams) -> tuple[float, float]:
    """Return the transition parameters ``(tau1, tau2)``.

    Shishkin and BS: ``tau1 = min(1/2, sigma*eps/alpha*ln N)`` and
    ``tau2 = min(1/4, sigma*sqrt(eps)/delta*ln N)``.  Bakhvalov replaces
    ``ln N`` by ``ln(1/eps)`` and ``ln(1/sqrt(eps))`` respectively, which is
    where its generating functions reach the coarse part.
    """
    if p.N < 4:
        raise ValidationError("N must be at least 4")
    if p.family == "bakhvalov":
        if p.epsilon >= 1.0:
            raise ValidationError("the Bakhvalov mesh requires epsilon < 1")
        log_x, log_y = -math.log(p.epsilon), -0.5 * math.log(p.epsilon)
    else:
        log_x = log_y = math.log(p.N)
    tau1 = min(0.5, p.sigma * p.epsilon / p.alpha * log_x)
    tau2 = min(0.25, p.sigma * math.sqrt(p.epsilon) / p.delta * log_y)
    return tau1, tau2


@dataclass(frozen=True)
class TensorMesh:
    x: np.ndarray
    y: np.ndarray
    tau1: float
    tau2: float
    params: MeshParams | None = None
    hx: np.ndarray = field(init=False, repr=False)
    hy: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.array(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValidationError("x and y node vectors must be 1D with equal length")
        hx, hy = np.diff(x), np.diff(y)
        if not (np.all(hx > 0) and np.all(hy > 0)):
            raise ValidationError("mesh nodes must be strictly increasing")
        if x[0] != 0.0 or x[-1] != 1.0 or y[0] != 0.0 or y[-1] != 1.0:
            raise ValidationError("mesh must span the unit square")
        for arr in (x, y, hx, hy):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "hx", hx)
        object.__setattr__(self, "hy", hy)

    @property
    def N(self) -> int:
        return self.x.size - 1

    @property
    def n_elements(self) -> int:
        return self.N * self.N

    @property
    def family(self) -> str | None:
        return None if self.params is None else self.params.family

    def element_index(self, i: int, j: int) -> int:
        """Flat index of ``K_ij`` (1-based ``i``, ``j``)."""
        _check_element(self, i, j)
        return (j - 1) * self.N + (i - 1)

    def element_sizes(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-element ``(hx, hy)`` arrays in flat element order."""
        hx = np.tile(self.hx, self.N)
        hy = np.repeat(self.hy, self.N)
        return hx, hy

    def dumps(self) -> str:
        """Plain-text dump: one ``x:`` and one ``y:`` line, 17 significant digits."""
        fmt = lambda v: " ".join(f"{t:.17g}" for t in v)  # noqa: E731
        return f"x: {fmt(self.x)}\ny: {fmt(self.y)}\n"

    @classmethod
    def loads(cls, text: str) -> TensorMesh:
        rows = {}
        for line in text.strip().splitlines():
            key, _, values = line.partition(":")
            rows[key.strip()] = np.array([float(v) for v in values.split()])
        if set(rows) != {"x", "y"}:
            raise ValidationError("mesh dump must contain exactly an x: and a y: line")
        return cls(rows["x"], rows["y"], tau1=math.nan, tau2=math.nan)


def _neg_log(numer: np.ndarray, N: int) -> np.ndarray:
    # generator -ln(1 - m(1-c)t) with the argument pre-expanded as numer/N so
    # that no 1 - (1 - small) cancellation appears
    return -np.log(numer / N)


def _x_nodes(p: MeshParams, tau1: float) -> np.ndarray:
    N = p.N
    i = np.arange(N + 1)
    x = np.empty(N + 1)
    lo = i <= N // 2
    x[lo] = (1.0 - tau1) * (2.0 * i[lo] / N)
    hi = ~lo
    ih = i[hi]
    if p.family == "shishkin" or tau1 == 0.5:
        x[hi] = 1.0 - tau1 * (2.0 * (N - ih) / N)
    else:
        c = 1.0 / N if p.family == "bs" else p.epsilon
        # 1 - 2(1-c)t with t = 1 - i/N
        arg = (2 * ih - N) + 2.0 * c * (N - ih)
        x[hi] = 1.0 - p.sigma * p.epsilon / p.alpha * _neg_log(arg, N)
        x[-1] = 1.0
    return x


def _y_nodes(p: MeshParams, tau2: float) -> np.ndarray:
    N = p.N
    j = np.arange(N + 1)
    y = np.empty(N + 1)
    bot = j <= N // 4
    top = j >= 3 * N // 4
    mid = ~(bot | top)
    y[mid] = tau2 + (1.0 - 2.0 * tau2) * ((4 * j[mid] - N) / (2.0 * N))
    if p.family == "shishkin" or tau2 == 0.25:
        y[bot] = tau2 * (4.0 * j[bot] / N)
        y[top] = 1.0 - tau2 * (4.0 * (N - j[top]) / N)
    else:
        c = 1.0 / N if p.family == "bs" else math.sqrt(p.epsilon)
        scale = p.sigma * math.sqrt(p.epsilon) / p.delta
        jb = j[bot]
        # 1 - 4(1-c)t with t = j/N
        y[bot] = scale * _neg_log(N - 4 * jb + 4.0 * c * jb, N)
        jt = j[top]
        # t = 1 - j/N
        y[top] = 1.0 - scale * _neg_log((4 * jt - 3 * N) + 4.0 * c * (N - jt), N)
        y[0], y[-1] = 0.0, 1.0
        # the transition node j = 3N/4 belongs to the uniform part
        y[3 * N // 4] = 1.0 - tau2
    return y


def build_mesh(p: MeshParams) -> TensorMesh:
    """Build the tensor mesh for the given parameters.

    A direction whose transition parameter saturates (``tau1 = 1/2`` or
    ``tau2 = 1/4``) falls back to the uniform mesh in that direction for all
    families.
    """
    tau1, tau2 = transition_params(p)
    x = _x_nodes(p, tau1)
    y = _y_nodes(p, tau2)
    if not (np.all(np.diff(x) > 0) and np.all(np.diff(y) > 0)):
        raise ValidationError(
            f"{p.family} mesh is not monotone for epsilon={p.epsilon:g}, N={p.N}, "
            f"sigma={p.sigma:g}"
        )
    return TensorMesh(x, y, tau1, tau2, params=p)


def _check_element(mesh: TensorMesh, i: int, j: int) -> None:
    N = mesh.N
    if not (1 <= i <= N and 1 <= j <= N):
        raise ValidationError(f"element index ({i}, {j}) outside 1..{N}")


def classify_element(mesh: TensorMesh, i: int, j: int) -> Region:
    """Region of element ``K_ij`` from its corner coordinates."""
    _check_element(mesh, i, j)
    fine_x = mesh.x[i - 1] >= 1.0 - mesh.tau1
    fine_y = mesh.y[j] <= mesh.tau2 or mesh.y[j - 1] >= 1.0 - mesh.tau2
    return _REGION_TABLE[fine_x][fine_y]


_REGION_TABLE = {
    False: {False: Region.OMEGA11, True: Region.OMEGA12},
    True: {False: Region.OMEGA21, True: Region.OMEGA22},
}


def region_codes(mesh: TensorMesh) -> np.ndarray:
    """Region code (11, 12, 21, 22) of every element, in flat element order."""
    fine_x = mesh.x[:-1] >= 1.0 - mesh.tau1
    fine_y = (mesh.y[1:] <= mesh.tau2) | (mesh.y[:-1] >= 1.0 - mesh.tau2)
    codes = 11 + 10 * fine_x[None, :].astype(int) + fine_y[:, None].astype(int)
    return codes.ravel()
