"""Estimator-style wrappers (``fit`` / ``predict`` / ``transform``).

They follow the scikit-learn conventions -- hyper-parameters in ``__init__``,
learned state in trailing-underscore attributes, ``get_params`` /
``set_params`` / ``clone`` via :class:`~sklearn.base.BaseEstimator` -- so the
copy machinery composes with that tooling.  The "samples" are connections.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .copies import LineFamily, classify_line, curvature_deviation, default_tolerance
from .forms import inner
from .solver import SolverOptions, certified_directions, find_copy
from .validation import check_form, check_same_space

__all__ = ["CopyFinder", "InfinitesimalCopyFinder", "LineClassifier"]


class LineClassifier(BaseEstimator):
    """Classify the line through ``A`` and ``A + K``.

    Parameters
    ----------
    tol : float or None
        Relative tolerance; ``None`` picks the backend default
        (1e-8 polynomial, 1e-4 grid).

    Attributes
    ----------
    report_ : CopyReport
    verdict_ : str
    """

    def __init__(self, tol=None):
        self.tol = tol

    def fit(self, A, K):
        A = check_form(A, degree=1)
        K = check_form(K, degree=1)
        check_same_space(A, K)
        self.tol_ = self.tol if self.tol is not None else default_tolerance(A.domain)
        self.line_ = LineFamily(A, K)
        self.report_ = classify_line(A, K, self.tol_)
        self.verdict_ = self.report_.verdict
        return self

    def predict(self, ts):
        """Whether ``A + tK`` is a copy of ``A`` for each ``t``."""
        check_is_fitted(self, "report_")
        dev = curvature_deviation(self.line_.base, self.line_.direction, np.atleast_1d(ts))
        return np.asarray(dev) <= self.tol_


class InfinitesimalCopyFinder(BaseEstimator):
    """Near-null directions of ``delta -> D_A delta`` (grid backend).

    Attributes
    ----------
    directions_ : list of FormField
        Unit-norm directions, ascending singular value.
    singular_values_, residuals_ : ndarray
    certified_ : ndarray of bool
    n_null_ : int
        Number of certified infinitesimal copies among the returned ones.
    """

    def __init__(self, n_directions=6, cutoff_ratio=1e-8, singular_value_cutoff=None):
        self.n_directions = n_directions
        self.cutoff_ratio = cutoff_ratio
        self.singular_value_cutoff = singular_value_cutoff

    def fit(self, A, y=None):
        A = check_form(A, degree=1, backend="grid")
        opts = SolverOptions(
            cutoff_ratio=self.cutoff_ratio,
            singular_value_cutoff=self.singular_value_cutoff,
        )
        out = certified_directions(A, self.n_directions, opts)
        self.base_ = A
        self.directions_ = out["directions"]
        self.singular_values_ = out["singular_values"]
        self.residuals_ = out["residuals"]
        self.certified_ = out["certified"]
        self.cutoff_ = out["cutoff"]
        self.n_null_ = int(np.sum(self.certified_))
        return self

    def transform(self, K):
        """Components of ``K`` along the fitted directions (trace-form inner product)."""
        check_is_fitted(self, "directions_")
        K = check_form(K, degree=1)
        check_same_space(self.base_, K)
        return np.array([inner(d, K) for d in self.directions_])


class CopyFinder(BaseEstimator):
    """Levenberg-Marquardt search for a finite copy of ``A`` near ``A + K0``.

    Attributes
    ----------
    copy_ : FormField
        Difference ``K`` with ``D_A K + K^K ~ 0``.
    report_ : CopyReport
    n_iter_ : int
    history_ : list of dict
    """

    def __init__(self, max_iterations=200, residual_target=1e-10, step_damping=1e-3):
        self.max_iterations = max_iterations
        self.residual_target = residual_target
        self.step_damping = step_damping

    def fit(self, A, K0):
        A = check_form(A, degree=1, backend="grid")
        K0 = check_form(K0, degree=1, backend="grid")
        check_same_space(A, K0)
        opts = SolverOptions(
            max_iterations=self.max_iterations,
            residual_target=self.residual_target,
            step_damping=self.step_damping,
        )
        K, report = find_copy(A, K0, opts)
        self.copy_ = K
        self.report_ = report
        self.n_iter_ = report.solver["iterations"]
        self.history_ = report.solver["history"]
        return self

    def transform(self, A):
        """The copy ``A + K`` found during ``fit``."""
        check_is_fitted(self, "copy_")
        return A + self.copy_
