"""Seeded random algebra-valued forms for both backends.

All randomness flows from a single integer seed through numpy's counter-based
Philox generator.  Draw order: components in multi-index order, then
generators ``a = 0..N-1``, then (polynomial) monomials in lexicographic
exponent order or (grid) modes ``0..n_modes-1`` as amplitude, phase,
wave vector.
"""
from __future__ import annotations

import itertools

import numpy as np

from .forms import Domain, FormField, from_coefficients, multi_indices
from .lie_algebra import LieAlgebra

__all__ = ["make_rng", "random_form", "random_poly_terms", "sinusoid"]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


def random_poly_terms(rng: np.random.Generator, nvar: int, degree: int, scale: float = 1.0) -> dict:
    exps = [
        e for e in itertools.product(range(degree + 1), repeat=nvar) if sum(e) <= degree
    ]
    return {e: scale * rng.standard_normal() for e in exps}


def sinusoid(amplitudes, phases, wavevectors, box_length: float = 1.0):
    """Callable ``x -> sum_j a_j sin(2 pi k_j . x / L + phi_j)`` over grid coordinates."""
    amplitudes = np.asarray(amplitudes, dtype=float)
    phases = np.asarray(phases, dtype=float)
    wavevectors = np.asarray(wavevectors, dtype=int)

    def f(x):
        out = np.zeros_like(x[0], dtype=float)
        for a, p, k in zip(amplitudes, phases, wavevectors):
            arg = sum(int(k[i]) * x[i] for i in range(len(x)))
            out = out + a * np.sin(2 * np.pi * arg / box_length + p)
        return out

    return f


def random_form(
    domain: Domain,
    algebra: LieAlgebra,
    degree: int,
    rng: np.random.Generator,
    *,
    poly_degree: int = 3,
    n_modes: int = 2,
    max_wavenumber: int = 1,
    scale: float = 1.0,
) -> FormField:
    """Random algebra-valued ``degree``-form.

    Polynomial components have total degree ``<= poly_degree``; grid components
    are sums of ``n_modes`` sinusoids with wave-vector entries in
    ``[-max_wavenumber, max_wavenumber]``, so they can be refined.
    """
    d = domain.dim
    coeffs = {}
    for k in multi_indices(d, degree):
        row = []
        for _ in range(algebra.dim):
            if domain.is_grid:
                amps = scale * rng.standard_normal(n_modes)
                phases = rng.uniform(0, 2 * np.pi, n_modes)
                kv = rng.integers(-max_wavenumber, max_wavenumber + 1, size=(n_modes, d))
                row.append(sinusoid(amps, phases, kv, domain.box_length))
            else:
                row.append(random_poly_terms(rng, d, poly_degree, scale))
        coeffs[k] = row
    return from_coefficients(domain, algebra, degree, coeffs)
