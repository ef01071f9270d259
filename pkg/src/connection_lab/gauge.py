"""Connections, curvature, covariant derivatives and gauge transformations.

A connection is a degree-1 :class:`~connection_lab.forms.FormField`; what
makes it a connection is the affine transformation law implemented by
:func:`gauge_transform_connection`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import exp, factorial

import numpy as np
from scipy.linalg import expm

from .forms import (
    BackendError,
    FormField,
    MatPoly,
    exterior_derivative,
    l2_norm,
    wedge,
)
from .lie_algebra import LieAlgebra

__all__ = [
    "GroupField",
    "bianchi_residual",
    "check_connection",
    "cov_d_adjoint_1form",
    "cov_d_adjoint_2form",
    "cov_d_vector",
    "curvature",
    "gauge_transform_adjoint",
    "gauge_transform_connection",
    "pure_gauge",
    "relative_residual",
]

# tail bound for the truncated exponential series; coefficient blocks below
# _CHOP_TOL are dropped (|x^e| <= 1 on the unit box bounds the error)
_SERIES_TOL = 1e-16
_CHOP_TOL = 1e-20
_MAX_SERIES_TERMS = 200


def check_connection(A: FormField) -> FormField:
    if not isinstance(A, FormField):
        raise TypeError(f"expected a FormField, got {type(A).__name__}")
    if A.degree != 1:
        raise ValueError(f"a connection is a 1-form, got degree {A.degree}")
    return A


def relative_residual(residual: FormField, *terms: FormField) -> float:
    """``|residual| / (1 + sum |terms|)``."""
    return l2_norm(residual) / (1.0 + sum(l2_norm(t) for t in terms))


def curvature(A: FormField) -> FormField:
    """``F = dA + A^A``."""
    check_connection(A)
    return exterior_derivative(A) + wedge(A, A)


def cov_d_adjoint_1form(A: FormField, K: FormField) -> FormField:
    """``DK = dK + A^K + K^A`` for an adjoint 1-form ``K``."""
    check_connection(A)
    if K.degree != 1:
        raise ValueError(f"expected a 1-form, got degree {K.degree}")
    return exterior_derivative(K) + wedge(A, K) + wedge(K, A)


def cov_d_adjoint_2form(A: FormField, W: FormField) -> FormField:
    """``DW = dW + A^W - W^A`` for an adjoint 2-form ``W``.

    In two dimensions there are no 3-forms and the (empty) zero 3-form is
    returned.
    """
    check_connection(A)
    if W.degree != 2:
        raise ValueError(f"expected a 2-form, got degree {W.degree}")
    if A.domain.dim < 3:
        return FormField(3, A.domain, A.algebra, {})
    return exterior_derivative(W) + wedge(A, W) - wedge(W, A)


def cov_d_vector(A: FormField, V: FormField) -> FormField:
    """``DV = dV + A V`` for a column field ``V`` in the defining representation."""
    check_connection(A)
    n = A.algebra.rep_dim
    if V.degree != 0 or V.value_shape[0] != n:
        raise ValueError(f"expected a 0-form with {n}-row values, got {V.value_shape}")
    return exterior_derivative(V) + wedge(A, V)


def bianchi_residual(A: FormField) -> float:
    """Absolute ``|D F|`` for ``F = curvature(A)``.

    Returns 0.0 in two dimensions, where the identity is vacuous.
    """
    if A.domain.dim < 3:
        return 0.0
    return l2_norm(cov_d_adjoint_2form(A, curvature(A)))


# ---------------------------------------------------------------------------
# group-valued fields


def _poly_exp(X: MatPoly, n: int) -> MatPoly:
    bound = float(np.sum(np.linalg.norm(X.coef, ord=2, axis=(-2, -1))))
    term = MatPoly.constant(X.nvar, np.eye(n))
    total = term
    for k in range(1, _MAX_SERIES_TERMS):
        term = (term @ X) * (1.0 / k)
        total = total + term
        if bound ** (k + 1) / factorial(k + 1) * exp(bound) < _SERIES_TOL:
            coef = total.coef.copy()
            coef[np.linalg.norm(coef, ord=2, axis=(-2, -1)) < _CHOP_TOL] = 0.0
            return MatPoly(coef)
    raise ArithmeticError(f"exponential series did not converge (bound {bound:.3g})")


@dataclass(frozen=True, eq=False)
class GroupField:
    """Point-dependent group element ``g(x)`` together with ``g(x)^-1``.

    On the grid both are sampled unitaries; on the polynomial backend they are
    exponential series of a polynomial generator, truncated once the tail is
    below 1e-16 on the unit box.
    """

    g: FormField
    g_inv: FormField
    source: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.g.degree != 0 or self.g_inv.degree != 0:
            raise ValueError("group fields are 0-forms")
        if self.g.domain != self.g_inv.domain:
            raise BackendError("g and g^-1 live on different domains")

    @property
    def domain(self):
        return self.g.domain

    @property
    def algebra(self) -> LieAlgebra:
        return self.g.algebra

    @classmethod
    def identity(cls, domain, algebra: LieAlgebra) -> "GroupField":
        from .forms import constant_form

        one = constant_form(domain, algebra, 0, {(): np.eye(algebra.rep_dim)})
        return cls(one, one)

    @classmethod
    def exp(cls, X: FormField) -> "GroupField":
        """``exp(X)`` for an algebra-valued 0-form ``X``."""
        if X.degree != 0:
            raise ValueError("generator must be a 0-form")
        c = X.components[()]
        n = X.algebra.rep_dim
        if isinstance(c, MatPoly):
            g = _poly_exp(c, n)
            ginv = _poly_exp(-c, n)
        else:
            g = expm(c)
            ginv = np.conj(np.swapaxes(g, -1, -2))
        mk = lambda v: FormField(0, X.domain, X.algebra, {(): v})  # noqa: E731
        if X.source is not None and X.domain.is_grid:
            src = X.source

            def source(dom):
                return cls.exp(src(dom))
            return cls(mk(g), mk(ginv), source)
        return cls(mk(g), mk(ginv))

    def __matmul__(self, other: "GroupField") -> "GroupField":
        return GroupField(wedge(self.g, other.g), wedge(other.g_inv, self.g_inv))

    def inverse(self) -> "GroupField":
        return GroupField(self.g_inv, self.g)

    def unitarity_defect(self) -> float:
        """Max over samples of ``|g^dag g - 1|`` (entrywise)."""
        vals = self.g.values()
        n = vals.shape[-1]
        prod = np.conj(np.swapaxes(vals, -1, -2)) @ vals
        return float(np.max(np.abs(prod - np.eye(n))))

    def refine(self) -> "GroupField":
        """Resample on the doubled grid from the generator."""
        if self.source is None:
            raise BackendError("group field has no analytic generator to resample")
        return self.source(self.domain.refined())


def gauge_transform_adjoint(g: GroupField, X: FormField) -> FormField:
    """Adjoint action ``g X g^-1`` on every component."""
    return wedge(wedge(g.g, X), g.g_inv)


def gauge_transform_connection(g: GroupField, A: FormField) -> FormField:
    """Affine law ``A -> g A g^-1 + g d(g^-1)``."""
    check_connection(A)
    return gauge_transform_adjoint(g, A) + wedge(g.g, exterior_derivative(g.g_inv))


def pure_gauge(g: GroupField) -> FormField:
    """``g d(g^-1)``, a flat connection."""
    return wedge(g.g, exterior_derivative(g.g_inv))
