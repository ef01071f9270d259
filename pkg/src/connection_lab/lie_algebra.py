"""Compact gauge algebras u(1), su(2), su(3) in an anti-Hermitian basis.

Generators are ``J_a = -(i/2) h_a`` with ``h_a`` the Pauli (su2) or Gell-Mann
(su3) matrices, and ``J = i`` for u(1).  The bracket closes as
``[J_a, J_b] = f[a, b, c] J_c``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

__all__ = [
    "AlgebraValue",
    "ConfigurationError",
    "LieAlgebra",
    "anticommutator",
    "commutator",
    "exp_map",
    "inner_product",
    "make_algebra",
]

ALGEBRA_NAMES = ("u1", "su2", "su3")


class ConfigurationError(ValueError):
    """Raised for unknown algebra names and other bad configuration."""


def _pauli() -> np.ndarray:
    return np.array(
        [
            [[0, 1], [1, 0]],
            [[0, -1j], [1j, 0]],
            [[1, 0], [0, -1]],
        ],
        dtype=complex,
    )


def _gell_mann() -> np.ndarray:
    lam = np.zeros((8, 3, 3), dtype=complex)
    lam[0][0, 1] = lam[0][1, 0] = 1
    lam[1][0, 1], lam[1][1, 0] = -1j, 1j
    lam[2][0, 0], lam[2][1, 1] = 1, -1
    lam[3][0, 2] = lam[3][2, 0] = 1
    lam[4][0, 2], lam[4][2, 0] = -1j, 1j
    lam[5][1, 2] = lam[5][2, 1] = 1
    lam[6][1, 2], lam[6][2, 1] = -1j, 1j
    lam[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return lam


def _trace_form(X: np.ndarray, Y: np.ndarray) -> float:
    return float(np.real(np.sum(np.conj(X) * Y)))


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """A matrix Lie algebra with a fixed orthogonal basis.

    Attributes
    ----------
    name : str
        One of ``"u1"``, ``"su2"``, ``"su3"``.
    generators : ndarray, shape (N, n, n)
        Anti-Hermitian basis matrices ``J_a``.
    structure_constants : ndarray, shape (N, N, N)
        Real ``f[a, b, c]`` with ``[J_a, J_b] = sum_c f[a, b, c] J_c``.
    """

    name: str
    generators: np.ndarray
    structure_constants: np.ndarray

    @property
    def dim(self) -> int:
        return self.generators.shape[0]

    @property
    def rep_dim(self) -> int:
        return self.generators.shape[1]

    @property
    def is_abelian(self) -> bool:
        return not np.any(self.structure_constants)

    @property
    def basis_norms(self) -> np.ndarray:
        """Trace-form norms ``<J_a, J_a>``."""
        return np.array([_trace_form(J, J) for J in self.generators])

    def matrix(self, coeffs) -> np.ndarray:
        """Matrix realisation ``sum_a coeffs[..., a] J_a`` (batched)."""
        coeffs = np.asarray(coeffs, dtype=float)
        return np.tensordot(coeffs, self.generators, axes=([-1], [0]))

    def coefficients(self, M) -> np.ndarray:
        """Basis coefficients of (a batch of) algebra matrices.

        Components outside the algebra are projected away.
        """
        M = np.asarray(M)
        proj = np.einsum("aij,...ij->...a", np.conj(self.generators), M)
        return np.real(proj) / self.basis_norms

    def validate(self, tol: float = 1e-13) -> dict:
        """Check closure, antisymmetry, Jacobi and anti-Hermiticity.

        Returns the maximal deviation of each property and raises
        :class:`ConfigurationError` if any exceeds ``tol``.
        """
        J, f = self.generators, self.structure_constants
        comm = np.einsum("aij,bjk->abik", J, J) - np.einsum("bij,ajk->abik", J, J)
        closure = np.max(np.abs(comm - np.einsum("abc,cij->abij", f, J)))
        antisym = np.max(np.abs(f + f.transpose(1, 0, 2)))
        jacobi = np.einsum("abe,ecd->abcd", f, f)
        jacobi = jacobi + jacobi.transpose(1, 2, 0, 3) + jacobi.transpose(2, 0, 1, 3)
        jac = np.max(np.abs(jacobi))
        herm = np.max(np.abs(J + np.conj(J.transpose(0, 2, 1))))
        out = {
            "closure": float(closure),
            "antisymmetry": float(antisym),
            "jacobi": float(jac),
            "anti_hermitian": float(herm),
        }
        if self.name != "u1":
            out["traceless"] = float(np.max(np.abs(np.trace(J, axis1=1, axis2=2))))
        bad = {k: v for k, v in out.items() if v > tol}
        if bad:
            raise ConfigurationError(f"algebra {self.name} fails validation: {bad}")
        return out


@lru_cache(maxsize=None)
def make_algebra(name: str) -> LieAlgebra:
    """Build ``u1``, ``su2`` or ``su3``."""
    if name == "u1":
        gens = np.array([[[1j]]])
    elif name == "su2":
        gens = -0.5j * _pauli()
    elif name == "su3":
        gens = -0.5j * _gell_mann()
    else:
        raise ConfigurationError(
            f"unknown algebra {name!r}; expected one of {ALGEBRA_NAMES}"
        )
    gens.setflags(write=False)
    norms = np.array([_trace_form(J, J) for J in gens])
    comm = np.einsum("aij,bjk->abik", gens, gens) - np.einsum("bij,ajk->abik", gens, gens)
    f = np.real(np.einsum("cij,abij->abc", np.conj(gens), comm)) / norms
    f[np.abs(f) < 1e-15] = 0.0
    f.setflags(write=False)
    return LieAlgebra(name, gens, f)


@dataclass(frozen=True, eq=False)
class AlgebraValue:
    """An element ``sum_a coeffs[a] J_a`` of a Lie algebra."""

    algebra: LieAlgebra
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if c.shape != (self.algebra.dim,):
            raise ValueError(
                f"expected {self.algebra.dim} coefficients, got {c.shape[0]}"
            )
        object.__setattr__(self, "coeffs", c)

    @property
    def matrix(self) -> np.ndarray:
        return self.algebra.matrix(self.coeffs)

    @classmethod
    def from_matrix(cls, algebra: LieAlgebra, M) -> "AlgebraValue":
        return cls(algebra, algebra.coefficients(M))

    def __add__(self, other: "AlgebraValue") -> "AlgebraValue":
        _same_algebra(self, other)
        return AlgebraValue(self.algebra, self.coeffs + other.coeffs)

    def __neg__(self) -> "AlgebraValue":
        return AlgebraValue(self.algebra, -self.coeffs)

    def __mul__(self, c: float) -> "AlgebraValue":
        return AlgebraValue(self.algebra, c * self.coeffs)

    __rmul__ = __mul__


def _same_algebra(X: AlgebraValue, Y: AlgebraValue) -> None:
    if X.algebra.name != Y.algebra.name:
        raise TypeError(
            f"algebra mismatch: {X.algebra.name} vs {Y.algebra.name}"
        )


def commutator(X: AlgebraValue, Y: AlgebraValue) -> AlgebraValue:
    """``[X, Y]`` computed from the structure constants."""
    _same_algebra(X, Y)
    f = X.algebra.structure_constants
    return AlgebraValue(X.algebra, np.einsum("a,b,abc->c", X.coeffs, Y.coeffs, f))


def anticommutator(X: AlgebraValue, Y: AlgebraValue) -> np.ndarray:
    """``XY + YX`` as a matrix; it generally leaves the algebra."""
    _same_algebra(X, Y)
    x, y = X.matrix, Y.matrix
    return x @ y + y @ x


def inner_product(X: AlgebraValue, Y: AlgebraValue) -> float:
    """Trace form ``Re tr(X^dagger Y)`` in the defining representation."""
    _same_algebra(X, Y)
    return _trace_form(X.matrix, Y.matrix)


def exp_map(X: AlgebraValue) -> np.ndarray:
    """Group element ``exp(X)`` as a unitary matrix."""
    return expm(X.matrix)
