"""Convergence, robustness and regime studies on the manufactured problem.

Tables share one CSV schema::

    family,k,epsilon,N,l2,l2_rate,sc,sc_rate,energy,energy_rate

with errors printed as ``%.4e``, rates as ``%.4f`` (blank where undefined)
and epsilon as ``%.6g``.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import LDGSystem, PenaltyParams, SolutionTriple, assemble
from .errors import ErrorReport, compute_errors
from .exceptions import SolverError, ValidationError
from .mesh import MeshParams, TensorMesh, build_mesh, normalize_family
from .problem import ManufacturedSolution
from .projection import ProjectionErrorReport, projection_error_report
from .quadrature import DEFAULT_QUAD_ORDER, DGSpace
from .solve import Factorization, factor, solve

log = logging.getLogger(__name__)

RATE_MODES = ("ShishkinLog", "PowerOf2", "GeneralRatio")
METRICS = ("l2", "sc", "energy")
CSV_COLUMNS = ("family", "k", "epsilon", "N", "l2", "l2_rate", "sc", "sc_rate",
               "energy", "energy_rate")
METRIC_TITLES = {"l2": "lnorm(w-W)", "sc": "|||Pi w-W|||", "energy": "|||w-W|||"}


def _rate_mode(mode: str) -> str:
    for m in RATE_MODES:
        if str(mode).lower() == m.lower():
            return m
    raise ValidationError(f"rate mode must be one of {RATE_MODES}, got {mode!r}")


def rate(e1: float, e2: float, n1: int, n2: int, mode: str) -> float:
    """Observed convergence rate between two consecutive runs."""
    mode = _rate_mode(mode)
    if not (e1 > 0 and e2 > 0) or not (math.isfinite(e1) and math.isfinite(e2)):
        raise ValidationError(f"errors must be positive and finite, got {e1}, {e2}")
    if not n2 > n1 or n1 < 2:
        raise ValidationError(f"need 2 <= n1 < n2, got n1={n1}, n2={n2}")
    if mode in ("ShishkinLog", "PowerOf2") and n2 != 2 * n1:
        raise ValidationError(f"{mode} rates need n2 = 2*n1, got n1={n1}, n2={n2}")
    ratio = math.log(e1 / e2)
    if mode == "ShishkinLog":
        return ratio / math.log(2.0 * math.log(n1) / math.log(n2))
    if mode == "PowerOf2":
        return ratio / math.log(2.0)
    return ratio / math.log(n2 / n1)


def default_rate_mode(family: str) -> str:
    return "ShishkinLog" if normalize_family(family) == "shishkin" else "PowerOf2"


# ---------------------------------------------------------------- configuration

@dataclass(frozen=True)
class StudyConfig:
    """Parameters of a study on the manufactured problem.

    ``sigma`` defaults to ``k + 2`` and ``lambda2`` to epsilon.
    """

    family: str = "shishkin"
    k: int = 1
    N: tuple[int, ...] = (4, 8, 16, 32, 64)
    epsilon: tuple[float, ...] = (1e-8,)
    sigma: float | None = None
    alpha: float = 1.0
    delta: float = 1.4
    lambda1: float = 0.0
    lambda2: float | None = None
    quad_order: int = DEFAULT_QUAD_ORDER
    rate_mode: str | None = None
    fmt: str = "csv"
    allow_lambda2_below_eps: bool = False
    backend: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "family", normalize_family(self.family))
        object.__setattr__(self, "N", tuple(int(n) for n in np.atleast_1d(self.N)))
        object.__setattr__(self, "epsilon", tuple(float(e) for e in np.atleast_1d(self.epsilon)))
        if int(self.k) != self.k or self.k < 0:
            raise ValidationError(f"k must be a nonnegative integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if not self.N or not self.epsilon:
            raise ValidationError("N and epsilon lists must be nonempty")
        if self.rate_mode is not None:
            object.__setattr__(self, "rate_mode", _rate_mode(self.rate_mode))
        if self.fmt not in ("csv", "markdown"):
            raise ValidationError(f"format must be csv or markdown, got {self.fmt!r}")
        for eps in self.epsilon:
            for n in self.N:
                self.mesh_params(eps, n)  # validates every combination
            self.penalty().resolve(eps, self.allow_lambda2_below_eps)

    @property
    def sigma_value(self) -> float:
        return float(self.k + 2) if self.sigma is None else float(self.sigma)

    @property
    def mode(self) -> str:
        return self.rate_mode or default_rate_mode(self.family)

    def mesh_params(self, epsilon: float, N: int) -> MeshParams:
        return MeshParams(epsilon, N, self.sigma_value, self.alpha, self.delta, self.family)

    def penalty(self) -> PenaltyParams:
        return PenaltyParams(self.lambda1, self.lambda2)


@dataclass
class CaseResult:
    """Everything produced by one (epsilon, N) run."""

    mesh: TensorMesh
    space: DGSpace
    system: LDGSystem
    factorization: Factorization
    solution: SolutionTriple
    exact: ManufacturedSolution
    report: ErrorReport


def run_case(cfg: StudyConfig, epsilon: float, N: int) -> CaseResult:
    """Build, assemble, factor, solve and measure one configuration."""
    exact = ManufacturedSolution(epsilon)
    coeffs = exact.coefficients()
    mesh = build_mesh(cfg.mesh_params(epsilon, N))
    space = DGSpace(mesh, cfg.k, cfg.quad_order)
    pen = cfg.penalty()
    system = assemble(coeffs, space, pen, cfg.allow_lambda2_below_eps)
    try:
        fact = factor(system, backend=cfg.backend)
        W = solve(fact, system)
    except SolverError as exc:
        raise SolverError(f"N={N}, epsilon={epsilon:g}: {exc}") from exc
    report = compute_errors(space, coeffs, system.penalty, W, exact)
    log.info("%s k=%d eps=%g N=%d: l2=%.4e sc=%.4e energy=%.4e", cfg.family, cfg.k,
             epsilon, N, report.l2_weighted, report.supercloseness, report.energy)
    return CaseResult(mesh, space, system, fact, W, exact, report)


# ---------------------------------------------------------------- tables

@dataclass
class RateRow:
    family: str
    k: int
    epsilon: float
    N: int
    l2: float
    sc: float
    energy: float
    l2_rate: float | None = None
    sc_rate: float | None = None
    energy_rate: float | None = None

    def error(self, metric: str) -> float:
        return getattr(self, metric)

    def rate(self, metric: str) -> float | None:
        return getattr(self, metric + "_rate")

    def cells(self) -> list[str]:
        out = []
        for col in CSV_COLUMNS:
            val = getattr(self, col)
            if col == "family":
                out.append(val)
            elif col in ("k", "N"):
                out.append(str(val))
            elif col == "epsilon":
                out.append(f"{val:.6g}")
            elif col.endswith("_rate"):
                out.append("" if val is None else f"{val:.4f}")
            else:
                out.append(f"{val:.4e}")
        return out


def _blank_or_float(s: str) -> float | None:
    return None if s == "" else float(s)


@dataclass
class RateTable:
    """Rows of errors and rates; rows sharing (family, k, epsilon) form a series."""

    rows: list[RateRow] = field(default_factory=list)
    mode: str | None = None
    title: str = ""

    def series(self) -> list[list[RateRow]]:
        groups: dict[tuple, list[RateRow]] = {}
        for row in self.rows:
            groups.setdefault((row.family, row.k, row.epsilon), []).append(row)
        return list(groups.values())

    def column(self, metric: str) -> np.ndarray:
        return np.array([r.error(metric) for r in self.rows])

    def rates(self, metric: str) -> list[float | None]:
        return [r.rate(metric) for r in self.rows]

    def fill_rates(self, mode: str) -> RateTable:
        """Compute rates between consecutive rows of each series."""
        self.mode = _rate_mode(mode)
        for rows in self.series():
            for prev, row in zip(rows, rows[1:]):
                for m in METRICS:
                    setattr(row, m + "_rate", rate(prev.error(m), row.error(m), prev.N, row.N, mode))
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(row.cells())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> RateTable:
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ValidationError(f"unexpected CSV header {header}")
        rows = []
        for cells in reader:
            if not cells:
                continue
            if len(cells) != len(CSV_COLUMNS):
                raise ValidationError(f"CSV row has {len(cells)} cells, expected {len(CSV_COLUMNS)}")
            d = dict(zip(CSV_COLUMNS, cells))
            rows.append(RateRow(
                family=d["family"], k=int(d["k"]), epsilon=float(d["epsilon"]), N=int(d["N"]),
                l2=float(d["l2"]), sc=float(d["sc"]), energy=float(d["energy"]),
                l2_rate=_blank_or_float(d["l2_rate"]), sc_rate=_blank_or_float(d["sc_rate"]),
                energy_rate=_blank_or_float(d["energy_rate"]),
            ))
        return cls(rows)

    def to_markdown(self, group_by: str = "k") -> str:
        """Grouped layout: one block per ``k`` (or per epsilon) with error/rate pairs."""
        lines = []
        if self.title:
            lines += [f"**{self.title}**", ""]
        head = ["", "N"]
        for m in METRICS:
            head += [METRIC_TITLES[m], "rate"]
        lines.append("| " + " | ".join(head) + " |")
        lines.append("|" + "|".join(["---"] * len(head)) + "|")
        last = None
        for row in self.rows:
            key = (row.family, row.k, row.epsilon)
            label = ""
            if key != last:
                label = f"P{row.k}" if group_by == "k" else f"eps={row.epsilon:.6g}"
                last = key
            cells = row.cells()
            d = dict(zip(CSV_COLUMNS, cells))
            vals = [label, d["N"]]
            for m in METRICS:
                vals += [d[m], d[m + "_rate"] or "--"]
            lines.append("| " + " | ".join(vals) + " |")
        return "\n".join(lines) + "\n"

    def to_markdown_robustness(self) -> str:
        lines = []
        if self.title:
            lines += [f"**{self.title}**", ""]
        lines.append("| epsilon | " + " | ".join(METRIC_TITLES[m] for m in METRICS) + " |")
        lines.append("|---|---|---|---|")
        for row in self.rows:
            d = dict(zip(CSV_COLUMNS, row.cells()))
            lines.append(f"| {d['epsilon']} | " + " | ".join(d[m] for m in METRICS) + " |")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str, kind: str = "convergence") -> str:
        if fmt == "csv":
            return self.to_csv()
        if kind == "robustness":
            return self.to_markdown_robustness()
        return self.to_markdown("epsilon" if kind == "regime" else "k")


def table_row(cfg: StudyConfig, report: ErrorReport) -> RateRow:
    """Table row (without rates) for one error report."""
    return RateRow(cfg.family, cfg.k, report.epsilon, report.N, report.l2_weighted,
                   report.supercloseness, report.energy)


def _check_increasing(Ns) -> None:
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValidationError(f"N list must be strictly increasing, got {list(Ns)}")


def run_convergence(cfg: StudyConfig) -> RateTable:
    """Errors and rates over ``cfg.N`` for each epsilon in ``cfg.epsilon``."""
    _check_increasing(cfg.N)
    table = RateTable(title=f"{cfg.family} mesh, k={cfg.k}")
    for eps in cfg.epsilon:
        for N in cfg.N:
            table.rows.append(table_row(cfg, run_case(cfg, eps, N).report))
    return table.fill_rates(cfg.mode)


def run_robustness(cfg: StudyConfig) -> RateTable:
    """One row per epsilon at the single ``N`` in ``cfg.N``; rates are blank."""
    if len(cfg.N) != 1:
        raise ValidationError(f"robustness study takes exactly one N, got {list(cfg.N)}")
    table = RateTable(title=f"Robustness: {cfg.family} mesh, k={cfg.k}, N={cfg.N[0]}")
    for eps in cfg.epsilon:
        table.rows.append(table_row(cfg, run_case(cfg, eps, cfg.N[0]).report))
    return table


def run_regime_study(cfg: StudyConfig, sqrt_eps: list[float] | None = None) -> RateTable:
    """Non-doubling N sequences with rates ``log(e1/e2) / log(N2/N1)``.

    ``sqrt_eps`` overrides ``cfg.epsilon`` with the squares of its entries.
    """
    if sqrt_eps is not None:
        s = np.asarray(sqrt_eps, dtype=float)
        if np.any(s <= 0):
            raise ValidationError("sqrt(epsilon) values must be positive")
        cfg = replace(cfg, epsilon=tuple(float(v * v) for v in s))
    cfg = replace(cfg, rate_mode="GeneralRatio")
    _check_increasing(cfg.N)
    table = RateTable(title=f"{cfg.family} mesh, k={cfg.k}")
    for eps in cfg.epsilon:
        for N in cfg.N:
            table.rows.append(table_row(cfg, run_case(cfg, eps, N).report))
    return table.fill_rates("GeneralRatio")


# ---------------------------------------------------------------- projection rates

PROJ_COLUMNS = ("family", "k", "epsilon", "N", "quantity", "value", "rate")


@dataclass
class ProjectionRateTable:
    reports: list[ProjectionErrorReport]
    family: str
    mode: str

    def rates(self, quantity: str) -> list[float | None]:
        out: list[float | None] = [None]
        for a, b in zip(self.reports, self.reports[1:]):
            ea, eb = getattr(a, quantity), getattr(b, quantity)
            if ea > 0 and eb > 0:
                out.append(rate(ea, eb, a.N, b.N, self.mode))
            else:
                out.append(None)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(PROJ_COLUMNS)
        for q in ProjectionErrorReport.QUANTITIES:
            for rep, r in zip(self.reports, self.rates(q)):
                writer.writerow([self.family, rep.k, f"{rep.epsilon:.6g}", rep.N, q,
                                 f"{getattr(rep, q):.4e}", "" if r is None else f"{r:.4f}"])
        return buf.getvalue()

    def to_markdown(self) -> str:
        Ns = [r.N for r in self.reports]
        head = ["quantity"] + [f"N={n}" for n in Ns] + [f"rate {a}->{b}" for a, b in zip(Ns, Ns[1:])]
        lines = ["| " + " | ".join(head) + " |", "|" + "|".join(["---"] * len(head)) + "|"]
        for q in ProjectionErrorReport.QUANTITIES:
            vals = [f"{getattr(r, q):.4e}" for r in self.reports]
            rts = ["--" if r is None else f"{r:.4f}" for r in self.rates(q)[1:]]
            lines.append("| " + " | ".join([q] + vals + rts) + " |")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_markdown()


def run_projection_rates(cfg: StudyConfig) -> ProjectionRateTable:
    """Projection errors ``w - Pi w`` and their observed rates over ``cfg.N``."""
    _check_increasing(cfg.N)
    if len(cfg.epsilon) != 1:
        raise ValidationError("projection rates take exactly one epsilon")
    eps = cfg.epsilon[0]
    exact = ManufacturedSolution(eps)
    reports = []
    for N in cfg.N:
        space = DGSpace(build_mesh(cfg.mesh_params(eps, N)), cfg.k, cfg.quad_order)
        reports.append(projection_error_report(space, exact))
    return ProjectionRateTable(reports, cfg.family, cfg.mode)


# ---------------------------------------------------------------- pointwise dump

def grid_dump(result: CaseResult, M: int) -> str:
    """CSV of ``x, y, U, U - u`` on an ``M x M`` uniform grid of the closed square."""
    if int(M) != M or M < 2:
        raise ValidationError(f"grid size must be an integer >= 2, got {M}")
    t = np.linspace(0.0, 1.0, int(M))
    X, Y = np.meshgrid(t, t)
    Uh = result.solution.functions()[0](X, Y)
    err = Uh - result.exact.u(X, Y)
    buf = io.StringIO()
    buf.write("x,y,U,U_minus_u\n")
    for x, y, v, e in zip(X.ravel(), Y.ravel(), Uh.ravel(), err.ravel()):
        buf.write(f"{x:.17g},{y:.17g},{v:.17g},{e:.17g}\n")
    return buf.getvalue()
