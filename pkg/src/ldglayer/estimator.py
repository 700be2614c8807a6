"""Estimator-style wrapper around the assemble/factor/solve pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .assembly import PenaltyParams, assemble
from .errors import ErrorReport, compute_errors
from .exceptions import ValidationError
from .mesh import MeshParams, build_mesh
from .problem import ManufacturedSolution, ProblemCoefficients, validate_coefficient_condition
from .quadrature import DEFAULT_QUAD_ORDER, DGSpace
from .solve import factor, solve


class LDGSolver(RegressorMixin, BaseEstimator):
    """LDG approximation of ``-eps Lap u + a u_x + b u = f`` on the unit square.

    ``fit`` builds the layer-adapted mesh, assembles and solves; ``predict``
    evaluates the discrete ``U`` at points ``X`` of shape ``(n, 2)``.  Without
    explicit coefficients the manufactured problem with the given epsilon is
    solved, so ``score(X, u(X))`` is meaningful out of the box.

    Parameters mirror the CLI flags; ``sigma=None`` means ``k + 2`` and
    ``lambda2=None`` means epsilon.
    """

    def __init__(self, epsilon=1e-8, N=16, k=1, mesh="shishkin", sigma=None, alpha=1.0,
                 delta=1.4, lambda1=0.0, lambda2=None, quad_order=DEFAULT_QUAD_ORDER,
                 backend="auto", allow_lambda2_below_eps=False):
        self.epsilon = epsilon
        self.N = N
        self.k = k
        self.mesh = mesh
        self.sigma = sigma
        self.alpha = alpha
        self.delta = delta
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.quad_order = quad_order
        self.backend = backend
        self.allow_lambda2_below_eps = allow_lambda2_below_eps

    def fit(self, X=None, y=None, coefficients: ProblemCoefficients | None = None):
        """Solve the problem.  ``X`` and ``y`` are accepted for API symmetry and ignored."""
        if coefficients is None:
            self.exact_ = ManufacturedSolution(self.epsilon)
            coefficients = self.exact_.coefficients()
        else:
            if coefficients.epsilon != self.epsilon:
                raise ValidationError(
                    f"coefficients have epsilon={coefficients.epsilon:g}, estimator has "
                    f"{self.epsilon:g}")
            self.exact_ = None
        report = validate_coefficient_condition(coefficients)
        if not report.satisfied:
            raise ValidationError(
                f"coefficient condition violated: min(b - a_x/2) = {report.minimum:g} at "
                f"{report.location}, min(a) = {report.alpha:g}; both must be positive")
        sigma = self.k + 2 if self.sigma is None else self.sigma
        self.mesh_ = build_mesh(MeshParams(self.epsilon, self.N, sigma, self.alpha, self.delta,
                                           self.mesh))
        self.space_ = DGSpace(self.mesh_, self.k, self.quad_order)
        self.system_ = assemble(coefficients, self.space_, PenaltyParams(self.lambda1, self.lambda2),
                                self.allow_lambda2_below_eps)
        self.factorization_ = factor(self.system_, backend=self.backend)
        self.solution_ = solve(self.factorization_, self.system_)
        self.coefficients_ = coefficients
        self.n_dofs_ = self.system_.n_dofs
        return self

    def _points(self, X) -> np.ndarray:
        check_is_fitted(self, "solution_")
        X = check_array(X, dtype=float, ensure_2d=True)
        if X.shape[1] != 2:
            raise ValidationError(f"X must have two columns (x, y), got {X.shape[1]}")
        if np.any(X < 0.0) or np.any(X > 1.0):
            raise ValidationError("points must lie in the closed unit square")
        return X

    def predict(self, X) -> np.ndarray:
        """Discrete ``U`` at the rows of ``X``."""
        X = self._points(X)
        return self.solution_.functions()[0](X[:, 0], X[:, 1])

    def predict_flux(self, X) -> np.ndarray:
        """``(U, P, Q)`` at the rows of ``X``, shape ``(n, 3)``."""
        X = self._points(X)
        return np.column_stack([f(X[:, 0], X[:, 1]) for f in self.solution_.functions()])

    def error_report(self, exact=None) -> ErrorReport:
        """Errors against ``exact`` (default: the manufactured solution used by ``fit``)."""
        check_is_fitted(self, "solution_")
        exact = exact if exact is not None else self.exact_
        if exact is None:
            raise ValidationError("no exact solution available; pass one explicitly")
        return compute_errors(self.space_, self.coefficients_, self.system_.penalty,
                              self.solution_, exact)
