"""Ready-made connection pairs with known copy structure.

Each builder returns ``(A, K)`` for the line ``A + tK``.
"""
from __future__ import annotations

import numpy as np

from .copies import ConstructionError, make_pure_gauge, make_stabilizer_copy
from .forms import Domain, constant_form, from_coefficients, zeros
from .gauge import GroupField
from .lie_algebra import LieAlgebra
from .randomfields import random_poly_terms, sinusoid

__all__ = [
    "single_generator_pair",
    "stabilizer_pair",
    "vacuum_pair",
]


def _profile(domain: Domain, amplitude: float = 1.0):
    """Scalar depending on ``x^1`` only."""
    if domain.is_grid:
        return sinusoid([amplitude], [0.0], [[1] + [0] * (domain.dim - 1)], domain.box_length)
    e1 = lambda k: (k,) + (0,) * (domain.dim - 1)  # noqa: E731
    return {e1(1): amplitude, e1(2): -amplitude}


def single_generator_pair(domain: Domain, algebra: LieAlgebra, axis: int = None, amplitude: float = 1.0):
    """``A = 0`` and ``K = J_axis phi(x^1) dx^1``: a line of copies.

    ``dK = 0`` because ``phi`` depends only on ``x^1``, and ``K^K = 0`` because
    ``K`` has a single component.
    """
    if axis is None:
        axis = algebra.dim - 1
    row = [None] * algebra.dim
    row[axis] = _profile(domain, amplitude)
    K = from_coefficients(domain, algebra, 1, {(0,): row})
    return zeros(domain, algebra, 1), K


def stabilizer_pair(domain: Domain, algebra: LieAlgebra, c: float = 1.0, axis: int = 2,
                    amplitude: float = 1.0, alpha=None):
    """su(2) stabilizer copy: ``A = c (J_a dx^1 + J_b dx^2)`` with ``[J_a, J_b] = J_axis``.

    ``alpha`` defaults to ``sin(2 pi x^1 / L)`` on the grid and
    ``x^1 (1 - x^1)`` for polynomials (both scaled by ``amplitude``).
    """
    if algebra.name != "su2":
        raise ConstructionError("the stabilizer witness is built for su2")
    a, b = (axis + 1) % 3, (axis + 2) % 3
    J = algebra.generators
    A = constant_form(domain, algebra, 1, {(0,): c * J[a], (1,): c * J[b]})
    if alpha is None:
        alpha = _profile(domain, amplitude)
    A2, K = make_stabilizer_copy(A, alpha, axis)
    return A, K


def vacuum_pair(domain: Domain, algebra: LieAlgebra, rng: np.random.Generator,
                scale: float = 0.3, axis: int = None, commuting: bool = True):
    """Two pure gauges ``g1 d g1^-1`` and ``g2 d g2^-1``.

    ``g1 = exp(X)`` with a random generator (linear in ``x^1, x^2`` for
    polynomials, low-mode sinusoids on the grid).  With ``commuting`` the
    second element is ``g2 = g1 exp(phi J_axis)``, so ``K`` is ``g1``-conjugate
    to a single-generator closed form and the whole line is flat.  Otherwise
    ``g2`` is an independent random exponential and the line is generally
    not made of copies.
    """
    if axis is None:
        axis = algebra.dim - 1

    def scalar():
        if domain.is_grid:
            amps = scale * rng.standard_normal(2)
            phases = rng.uniform(0, 2 * np.pi, 2)
            kv = rng.integers(-1, 2, size=(2, domain.dim))
            return sinusoid(amps, phases, kv, domain.box_length)
        # polynomial generators use x^1, x^2 only: keeps exp series blocks small
        pad = (0,) * (domain.dim - 2)
        return {e + pad: c for e, c in random_poly_terms(rng, 2, 1, scale).items()}

    def linear_generator():
        return from_coefficients(domain, algebra, 0, {(): [scalar() for _ in range(algebra.dim)]})

    g1 = GroupField.exp(linear_generator())
    if commuting:
        row = [None] * algebra.dim
        row[axis] = scalar()
        h = GroupField.exp(from_coefficients(domain, algebra, 0, {(): row}))
        g2 = g1 @ h
    else:
        g2 = GroupField.exp(linear_generator())
    A = make_pure_gauge(g1)
    A2 = make_pure_gauge(g2)
    return A, A2 - A
