"""Input checks shared by the estimators and the CLI."""
from __future__ import annotations

from .forms import BackendError, FormField


def check_form(X, degree=None, backend=None) -> FormField:
    """Validate a :class:`FormField` argument and return it."""
    if not isinstance(X, FormField):
        raise TypeError(f"expected a FormField, got {type(X).__name__}")
    if degree is not None and X.degree != degree:
        raise ValueError(f"expected a {degree}-form, got degree {X.degree}")
    if backend is not None and X.domain.backend != backend:
        raise BackendError(f"expected the {backend} backend, got {X.domain.backend}")
    return X


def check_same_space(X: FormField, Y: FormField) -> None:
    """Both forms share domain and algebra."""
    if X.domain != Y.domain:
        raise BackendError(f"domain mismatch: {X.domain} vs {Y.domain}")
    if X.algebra.name != Y.algebra.name:
        raise BackendError(f"algebra mismatch: {X.algebra.name} vs {Y.algebra.name}")
