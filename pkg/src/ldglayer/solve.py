"""Sparse direct LU factorisation of the assembled system.

Two backends share one contract (relative residual <= 1e-10, singular
pivots reported by global index):

* ``pardiso`` -- MKL PARDISO through :mod:`pypardiso`; default when importable.
  Scaling and weighted matching are switched off: on these systems they
  trigger thousands of perturbed pivots, while plain pivoting needs none.
  A factorisation that perturbs any pivot is redone with SuperLU.
* ``superlu`` -- :func:`scipy.sparse.linalg.splu` with partial pivoting.
"""
from __future__ import annotations

import glob
import importlib.metadata
import logging
import os
import sys
import threading
import weakref
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import LDGSystem, SolutionTriple
from .exceptions import SolverError, ValidationError

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-14
RESIDUAL_TOL = 1e-10
DENSE_DIAGNOSIS_LIMIT = 4000
BACKENDS = ("auto", "pardiso", "superlu")

# 1-based PARDISO iparm settings
_PARDISO_IPARM = {
    1: 1,    # use the values below instead of defaults
    2: 2,    # METIS nested dissection
    8: 20,   # max iterative refinement steps
    10: 13,  # pivot perturbation 1e-13
    11: 0,   # no scaling
    13: 0,   # no weighted matching
    24: 0,   # classic (deterministic) factorisation
    18: -1,  # report nnz of the factors
    25: 0,   # sequential forward/backward solve
}


def _locate_mkl_rt() -> str | None:
    try:
        files = importlib.metadata.files("mkl") or []
    except importlib.metadata.PackageNotFoundError:
        files = []
    for f in files:
        if "mkl_rt" in str(f):
            path = os.path.realpath(str(f.locate()))
            if os.path.exists(path):
                return path
    for pattern in (os.path.join(sys.prefix, "lib", "libmkl_rt.so*"),
                    os.path.join(sys.prefix, "local", "lib", "libmkl_rt.so*")):
        hits = sorted(glob.glob(pattern))
        if hits:
            return hits[0]
    return None


def _import_pypardiso():
    if "PYPARDISO_MKL_RT" not in os.environ:
        path = _locate_mkl_rt()
        if path:
            os.environ["PYPARDISO_MKL_RT"] = path
    try:
        import pypardiso
    except (ImportError, OSError) as exc:
        log.debug("pypardiso unavailable: %s", exc)
        return None
    return pypardiso


_pypardiso = None
_pypardiso_checked = False


def pardiso_available() -> bool:
    global _pypardiso, _pypardiso_checked
    if not _pypardiso_checked:
        _pypardiso = _import_pypardiso()
        _pypardiso_checked = True
    return _pypardiso is not None


@dataclass(frozen=True)
class Factorization:
    """LU factors of a square sparse matrix; immutable and shareable."""

    backend: str
    matrix: sp.csr_matrix
    nnz_matrix: int
    nnz_factors: int
    _handle: object = field(repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def fill_ratio(self) -> float:
        return self.nnz_factors / max(self.nnz_matrix, 1)

    def apply_inverse(self, rhs: np.ndarray) -> np.ndarray:
        if self.backend == "superlu":
            return self._handle.solve(rhs)
        with self._lock:
            return np.asarray(self._handle.solve(self.matrix, rhs), dtype=float)


def _as_matrix(system) -> sp.csr_matrix:
    A = system.matrix if isinstance(system, LDGSystem) else system
    if not sp.issparse(A):
        A = sp.csr_matrix(np.asarray(A, dtype=float))
    A = sp.csr_matrix(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"matrix must be square, got {A.shape}")
    if not np.all(np.isfinite(A.data)):
        raise ValidationError("matrix has non-finite entries")
    A.sum_duplicates()
    A.sort_indices()
    return A


def _structural_check(A: sp.csr_matrix) -> None:
    empty_rows = np.flatnonzero(np.diff(A.indptr) == 0)
    if empty_rows.size:
        raise SolverError(f"structurally singular: empty row at global index {int(empty_rows[0])}")
    empty_cols = np.flatnonzero(np.bincount(A.indices, minlength=A.shape[1]) == 0)
    if empty_cols.size:
        raise SolverError(f"structurally singular: empty column at global index {int(empty_cols[0])}")


def _check_pivots(lu, scale: float) -> None:
    small = np.flatnonzero(np.abs(lu.U.diagonal()) < PIVOT_TOL * scale)
    if small.size:
        col = int(lu.perm_c[small[0]])
        raise SolverError(f"numerically singular pivot at global index {col}")


def _factor_superlu(A: sp.csr_matrix, permc_spec: str) -> Factorization:
    scale = np.abs(A.data).max()
    try:
        lu = spla.splu(A.tocsc(), permc_spec=permc_spec, diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        # exactly zero pivot; small systems are re-factorised densely to locate it
        if A.shape[0] <= DENSE_DIAGNOSIS_LIMIT:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                lu, _ = scipy.linalg.lu_factor(A.toarray(), check_finite=False)
            small = np.flatnonzero(np.abs(np.diag(lu)) < PIVOT_TOL * scale)
            if small.size:
                raise SolverError(f"numerically singular pivot at global index {int(small[0])}") from exc
        raise SolverError(f"LU factorisation failed: {exc}") from exc
    _check_pivots(lu, scale)
    return Factorization("superlu", A, A.nnz, lu.L.nnz + lu.U.nnz, lu)


def _factor_pardiso(A: sp.csr_matrix) -> Factorization | None:
    solver = _pypardiso.PyPardisoSolver(mtype=11)
    for i, v in _PARDISO_IPARM.items():
        solver.set_iparm(i, v)
    try:
        solver.factorize(A)
    except Exception as exc:  # PyPardisoError and ctypes failures
        log.debug("PARDISO factorisation failed (%s), falling back to SuperLU", exc)
        return None
    perturbed = int(solver.get_iparm(14))
    if perturbed:
        log.debug("PARDISO perturbed %d pivots, falling back to SuperLU", perturbed)
        solver.free_memory(everything=True)
        return None
    nnz_factors = int(solver.get_iparm(18))
    fact = Factorization("pardiso", A, A.nnz, nnz_factors, solver)
    # MKL keeps the factors until told otherwise; release them with the handle
    weakref.finalize(fact, solver.free_memory, everything=True)
    return fact


def factor(system: LDGSystem | sp.spmatrix, backend: str = "auto",
           permc_spec: str = "COLAMD") -> Factorization:
    """LU-factorise with pivoting and a fill-reducing ordering.

    ``permc_spec`` applies to the SuperLU backend only.
    """
    if backend not in BACKENDS:
        raise ValidationError(f"backend must be one of {BACKENDS}, got {backend!r}")
    A = _as_matrix(system)
    if A.shape[0] == 0:
        raise ValidationError("matrix is empty")
    _structural_check(A)
    fact = None
    if backend in ("auto", "pardiso"):
        if pardiso_available():
            fact = _factor_pardiso(A)
        elif backend == "pardiso":
            raise SolverError("PARDISO backend requested but pypardiso/MKL is not available")
    if fact is None:
        fact = _factor_superlu(A, permc_spec)
    log.debug("%s LU of %d unknowns: nnz(A)=%d nnz(L+U)=%d", fact.backend, A.shape[0],
              A.nnz, fact.nnz_factors)
    return fact


def solve_vector(fact: Factorization, rhs: np.ndarray) -> np.ndarray:
    """Solve ``A x = rhs`` and enforce the relative residual contract."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (fact.shape[0],):
        raise ValidationError(f"rhs has shape {rhs.shape}, expected ({fact.shape[0]},)")
    norm_b = np.linalg.norm(rhs)
    if norm_b == 0.0:
        return np.zeros_like(rhs)
    x = fact.apply_inverse(rhs)
    res = np.linalg.norm(fact.matrix @ x - rhs) / norm_b
    if not res <= RESIDUAL_TOL:
        raise SolverError(f"relative residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
    return x


def solve(fact: Factorization, system: LDGSystem, rhs: np.ndarray | None = None) -> SolutionTriple:
    """Solve and unpack the coefficients into a :class:`SolutionTriple`."""
    x = solve_vector(fact, system.rhs if rhs is None else rhs)
    return SolutionTriple.from_vector(system.space, x)


def solve_system(system: LDGSystem, backend: str = "auto") -> SolutionTriple:
    return solve(factor(system, backend=backend), system)
