"""Command-line entry point: ``ldglayer <subcommand> [options]``."""
from __future__ import annotations

import argparse
import logging
import math
import sys

import scipy.io

from .exceptions import SolverError, ValidationError
from .mesh import FAMILIES, build_mesh
from .quadrature import DEFAULT_QUAD_ORDER
from .study import (RateTable, StudyConfig, grid_dump, run_case, run_convergence,
                    run_projection_rates, run_regime_study, run_robustness, table_row)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER = 0, 2, 3

DEFAULT_N = {
    "solve": [16],
    "convergence": [4, 8, 16, 32, 64],
    "robustness": [64],
    "regime": [60, 80, 100, 120, 140, 160, 180, 200, 220],
    "proj-rates": [32, 64],
    "mesh-dump": [8],
}
DEFAULT_EPS = {
    "robustness": [10.0 ** -p for p in range(4, 11)],
}
DEFAULT_SQRT_EPS = {"regime": [0.02, 0.01, 0.0025]}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, action="append",
                   help="singular perturbation parameter (repeatable)")
    p.add_argument("--sqrt-epsilon", type=float, action="append",
                   help="give sqrt(epsilon) instead (repeatable)")
    p.add_argument("--N", type=int, action="append", dest="N",
                   help="elements per direction (repeatable)")
    p.add_argument("--k", type=int, default=1, help="polynomial degree")
    p.add_argument("--mesh", choices=FAMILIES,
                   help="mesh family (default shishkin; bs for regime)")
    p.add_argument("--sigma", type=float, help="mesh grading constant (default k+2)")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.4)
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--lambda2", type=float, help="top-boundary penalty (default epsilon)")
    p.add_argument("--quad-order", type=int, default=DEFAULT_QUAD_ORDER)
    p.add_argument("--format", choices=("csv", "markdown"), default="csv", dest="fmt")
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--allow-lambda2-below-eps", action="store_true")
    p.add_argument("--backend", choices=("auto", "pardiso", "superlu"), default="auto",
                   help="sparse LU backend")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="ldglayer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    helps = {
        "solve": "solve once and report the three errors",
        "convergence": "errors and rates over a list of N",
        "robustness": "errors over a list of epsilon at fixed N",
        "regime": "BS-mesh study over sqrt(epsilon) with general-ratio rates",
        "proj-rates": "projection errors w - Pi w and their rates",
        "mesh-dump": "print mesh nodes",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        _common(p)
        if name == "solve":
            p.add_argument("--dump-grid", type=int, metavar="M",
                           help="write an M x M grid of x, y, U, U-u")
            p.add_argument("--grid-out", default="grid.csv", help="path for --dump-grid")
            p.add_argument("--dump-matrix", metavar="PATH",
                           help="write the system matrix in MatrixMarket format")
    return parser


def _epsilons(args) -> list[float]:
    if args.epsilon and args.sqrt_epsilon:
        raise ValidationError("give either --epsilon or --sqrt-epsilon, not both")
    if args.sqrt_epsilon:
        if any(not s > 0 for s in args.sqrt_epsilon):
            raise ValidationError("--sqrt-epsilon values must be positive")
        return [s * s for s in args.sqrt_epsilon]
    if args.epsilon:
        return args.epsilon
    if args.command in DEFAULT_SQRT_EPS:
        return [s * s for s in DEFAULT_SQRT_EPS[args.command]]
    return DEFAULT_EPS.get(args.command, [1e-8])


def _config(args) -> StudyConfig:
    for name in ("epsilon", "sigma", "alpha", "delta", "lambda1", "lambda2"):
        vals = getattr(args, name)
        for v in vals if isinstance(vals, list) else [vals]:
            if v is not None and not math.isfinite(v):
                raise ValidationError(f"--{name} must be finite")
    family = args.mesh or ("bs" if args.command == "regime" else "shishkin")
    return StudyConfig(
        family=family, k=args.k, N=tuple(args.N or DEFAULT_N[args.command]),
        epsilon=tuple(_epsilons(args)), sigma=args.sigma, alpha=args.alpha, delta=args.delta,
        lambda1=args.lambda1, lambda2=args.lambda2, quad_order=args.quad_order, fmt=args.fmt,
        allow_lambda2_below_eps=args.allow_lambda2_below_eps, backend=args.backend,
    )


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solve(args, cfg: StudyConfig) -> str:
    if len(cfg.N) != 1 or len(cfg.epsilon) != 1:
        raise ValidationError("solve takes exactly one N and one epsilon")
    res = run_case(cfg, cfg.epsilon[0], cfg.N[0])
    if args.dump_matrix:
        scipy.io.mmwrite(args.dump_matrix, res.system.matrix, field="real",
                         comment=f"LDG system, family={cfg.family} k={cfg.k} N={cfg.N[0]} "
                                 f"epsilon={cfg.epsilon[0]:.6g}")
    if args.dump_grid is not None:
        _emit(grid_dump(res, args.dump_grid), args.grid_out)
    rep = res.report
    table = RateTable([table_row(cfg, rep)])
    if cfg.fmt == "csv":
        return table.to_csv()
    lines = [table.to_markdown(), "| region | lnorm(w-W) | |||Pi w-W||| | |||w-W||| |",
             "|---|---|---|---|"]
    for name, vals in rep.per_region.items():
        lines.append(f"| {name} | {vals['l2']:.4e} | {vals['sc']:.4e} | {vals['energy']:.4e} |")
    lines.append("")
    lines.append(f"plain L2 error of u: {rep.u_l2:.4e}; unknowns: {res.system.n_dofs}; "
                 f"LU fill ratio: {res.factorization.fill_ratio:.2f} ({res.factorization.backend})")
    return "\n".join(lines) + "\n"


def run(argv: list[str] | None = None) -> str:
    """Parse ``argv`` and return the rendered output (also written to ``--out``)."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s")
    cfg = _config(args)
    cmd = args.command
    if cmd == "solve":
        text = _solve(args, cfg)
    elif cmd == "convergence":
        text = run_convergence(cfg).render(cfg.fmt)
    elif cmd == "robustness":
        text = run_robustness(cfg).render(cfg.fmt, "robustness")
    elif cmd == "regime":
        text = run_regime_study(cfg).render(cfg.fmt, "regime")
    elif cmd == "proj-rates":
        text = run_projection_rates(cfg).render(cfg.fmt)
    else:
        if len(cfg.N) != 1 or len(cfg.epsilon) != 1:
            raise ValidationError("mesh-dump takes exactly one N and one epsilon")
        text = build_mesh(cfg.mesh_params(cfg.epsilon[0], cfg.N[0])).dumps()
        if not text.endswith("\n"):
            text += "\n"
    _emit(text, args.out)
    return text


def main(argv: list[str] | None = None) -> int:
    try:
        run(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
