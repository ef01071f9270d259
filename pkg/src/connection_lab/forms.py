"""Matrix-valued differential forms on a computational patch.

Two interchangeable backends hold the component fields:

* ``"polynomial"`` -- :class:`MatPoly`, polynomials in ``x^1..x^d`` with matrix
  coefficients, differentiated exactly.
* ``"grid"`` -- arrays of shape ``(n,)*d + value_shape`` on a periodic box,
  differentiated by centred differences.

A p-form stores one component per strictly increasing multi-index.  The
wedge product carries no ``1/p!q!`` factors, so for 1-forms
``(X^Y)_{mn} = X_m Y_n - X_n Y_m`` and a curvature reads
``F_{mn} = d_m A_n - d_n A_m + [A_m, A_n]``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from math import comb
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .lie_algebra import LieAlgebra

__all__ = [
    "BackendError",
    "Domain",
    "FormField",
    "MatPoly",
    "add",
    "constant_form",
    "exterior_derivative",
    "from_coefficients",
    "inner",
    "l2_norm",
    "multi_indices",
    "refine",
    "sample_poly_to_grid",
    "scale",
    "scalar_poly",
    "wedge",
    "zeros",
]

GRID = "grid"
POLYNOMIAL = "polynomial"


class BackendError(TypeError):
    """Operands live on incompatible domains, algebras or backends."""


# ---------------------------------------------------------------------------
# polynomial scalar fields


def _trim(coef: np.ndarray, nvar: int) -> np.ndarray:
    # drop trailing exactly-zero hyperplanes along each variable axis
    for ax in range(nvar):
        k = coef.shape[ax]
        while k > 1:
            last = np.take(coef, [k - 1], axis=ax)
            if np.any(last):
                break
            k -= 1
        if k < coef.shape[ax]:
            coef = np.take(coef, np.arange(k), axis=ax)
    return coef


# products with more block pairs than this go through the FFT
_FFT_THRESHOLD = 200_000


def _fft_product(a: np.ndarray, b: np.ndarray, shape: tuple) -> np.ndarray:
    axes = tuple(range(len(shape)))
    ah = np.fft.fftn(a, s=shape, axes=axes)
    bh = np.fft.fftn(b, s=shape, axes=axes)
    return np.fft.ifftn(ah @ bh, axes=axes)


class MatPoly:
    """Polynomial with matrix coefficients.

    ``coef[e_1, ..., e_d]`` is the ``(r, c)`` matrix multiplying
    ``x_1**e_1 * ... * x_d**e_d``.
    """

    __slots__ = ("coef",)
    __array_ufunc__ = None  # numpy scalars defer to our reflected operators

    def __init__(self, coef):
        coef = np.asarray(coef, dtype=complex)
        if coef.ndim < 2:
            raise ValueError("coefficient array needs trailing matrix axes")
        self.coef = _trim(coef, coef.ndim - 2)

    @classmethod
    def constant(cls, nvar: int, M) -> "MatPoly":
        M = np.asarray(M, dtype=complex)
        return cls(M.reshape((1,) * nvar + M.shape))

    @property
    def nvar(self) -> int:
        return self.coef.ndim - 2

    @property
    def value_shape(self) -> tuple:
        return self.coef.shape[-2:]

    @property
    def extents(self) -> tuple:
        return self.coef.shape[:-2]

    def _padded(self, shape) -> np.ndarray:
        if self.extents == tuple(shape):
            return self.coef
        pad = [(0, s - k) for s, k in zip(shape, self.extents)] + [(0, 0), (0, 0)]
        return np.pad(self.coef, pad)

    def __add__(self, other: "MatPoly") -> "MatPoly":
        if not isinstance(other, MatPoly):
            return NotImplemented
        shape = tuple(max(a, b) for a, b in zip(self.extents, other.extents))
        return MatPoly(self._padded(shape) + other._padded(shape))

    def __sub__(self, other: "MatPoly") -> "MatPoly":
        if not isinstance(other, MatPoly):
            return NotImplemented
        shape = tuple(max(a, b) for a, b in zip(self.extents, other.extents))
        return MatPoly(self._padded(shape) - other._padded(shape))

    def __neg__(self) -> "MatPoly":
        return MatPoly(-self.coef)

    def __mul__(self, c) -> "MatPoly":
        if isinstance(c, MatPoly):
            return NotImplemented
        return MatPoly(c * self.coef)

    __rmul__ = __mul__

    def __matmul__(self, other: "MatPoly") -> "MatPoly":
        if not isinstance(other, MatPoly):
            return NotImplemented
        a, b = self, other
        if a.value_shape == (1, 1) and b.value_shape == (1, 1):
            # scalars commute: fix the operand order so ab and ba agree bitwise
            if (b.coef.shape, b.coef.tobytes()) < (a.coef.shape, a.coef.tobytes()):
                a, b = b, a
        shape = tuple(x + y - 1 for x, y in zip(a.extents, b.extents))
        nz_a = np.argwhere(np.any(a.coef != 0, axis=(-2, -1)))
        nz_b = np.argwhere(np.any(b.coef != 0, axis=(-2, -1)))
        if len(nz_a) * len(nz_b) > _FFT_THRESHOLD:
            return MatPoly(_fft_product(a.coef, b.coef, shape))
        out = np.zeros(shape + (a.value_shape[0], b.value_shape[1]), dtype=complex)
        if len(nz_a) <= len(nz_b):
            kb = b.extents
            for idx in map(tuple, nz_a):
                sl = tuple(slice(i, i + k) for i, k in zip(idx, kb))
                out[sl] += a.coef[idx] @ b.coef
        else:
            ka = a.extents
            for idx in map(tuple, nz_b):
                sl = tuple(slice(i, i + k) for i, k in zip(idx, ka))
                out[sl] += a.coef @ b.coef[idx]
        return MatPoly(out)

    def partial(self, axis: int) -> "MatPoly":
        k = self.extents[axis]
        if k == 1:
            return MatPoly(np.zeros_like(self.coef))
        body = np.take(self.coef, np.arange(1, k), axis=axis)
        factors = np.arange(1, k).reshape(
            [-1 if i == axis else 1 for i in range(self.coef.ndim)]
        )
        return MatPoly(body * factors)

    def __call__(self, points) -> np.ndarray:
        """Evaluate at ``points`` of shape ``(P, d)``; returns ``(P, r, c)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        vals = None
        for ax in range(self.nvar):
            powers = points[:, ax, None] ** np.arange(self.extents[ax])
            if vals is None:
                vals = np.tensordot(powers, self.coef, axes=(1, 0))
            else:
                powers = powers.reshape(powers.shape + (1,) * (vals.ndim - 2))
                vals = np.sum(powers * vals, axis=1)
        return vals

    def on_lattice(self, axis_points) -> np.ndarray:
        """Evaluate on the tensor lattice ``axis_points x ... x axis_points``."""
        axis_points = np.asarray(axis_points, dtype=float)
        vals = self.coef
        for ax in range(self.nvar):
            vander = axis_points[:, None] ** np.arange(self.extents[ax])
            # contract the leading exponent axis, append the point axis last
            vals = np.moveaxis(np.tensordot(vander, vals, axes=(1, 0)), 0, -1)
        return np.moveaxis(vals, (0, 1), (-2, -1))

    def conj_transpose(self) -> "MatPoly":
        return MatPoly(np.conj(np.swapaxes(self.coef, -1, -2)))

    def __repr__(self) -> str:
        return f"MatPoly(extents={self.extents}, value_shape={self.value_shape})"


def scalar_poly(nvar: int, terms: Mapping[tuple, float]) -> MatPoly:
    """Scalar polynomial from ``{exponent tuple: coefficient}``."""
    if not terms:
        return MatPoly(np.zeros((1,) * nvar + (1, 1)))
    ext = [1 + max(e[i] for e in terms) for i in range(nvar)]
    coef = np.zeros(ext + [1, 1], dtype=complex)
    for e, c in terms.items():
        if len(e) != nvar:
            raise ValueError(f"exponent {e} does not have {nvar} entries")
        coef[tuple(e)] += c
    return MatPoly(coef)


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Domain:
    """Computational patch: a periodic grid or the polynomial unit box.

    The grid has ``sites_per_axis`` points ``x_i = i*h`` with
    ``h = box_length / sites_per_axis``.  Polynomial fields are sampled on a
    ``sampling_points_per_axis**dim`` lattice over ``[0, 1]**dim`` for norms.
    """

    dim: int
    backend: str
    sites_per_axis: Optional[int] = None
    box_length: float = 1.0
    sampling_points_per_axis: int = 4

    def __post_init__(self):
        if self.dim not in (2, 3, 4):
            raise ValueError(f"dim must be 2, 3 or 4, got {self.dim}")
        if self.backend == GRID:
            n = self.sites_per_axis
            if n is None or n < 4 or n % 2:
                raise ValueError(f"grid needs an even sites_per_axis >= 4, got {n}")
            if not self.box_length > 0:
                raise ValueError("box_length must be positive")
        elif self.backend == POLYNOMIAL:
            if self.sampling_points_per_axis < 4:
                raise ValueError("sampling_points_per_axis must be >= 4")
        else:
            raise ValueError(f"unknown backend {self.backend!r}")

    @classmethod
    def grid(cls, dim: int, n: int, box_length: float = 1.0) -> "Domain":
        return cls(dim, GRID, sites_per_axis=n, box_length=box_length)

    @classmethod
    def polynomial(cls, dim: int, m: int = 4) -> "Domain":
        return cls(dim, POLYNOMIAL, sampling_points_per_axis=m)

    @property
    def is_grid(self) -> bool:
        return self.backend == GRID

    @property
    def spacing(self) -> float:
        return self.box_length / self.sites_per_axis

    @property
    def shape(self) -> tuple:
        return (self.sites_per_axis,) * self.dim

    def coordinates(self) -> list:
        """Grid coordinate arrays, ``ij``-indexed."""
        axis = np.arange(self.sites_per_axis) * self.spacing
        return np.meshgrid(*([axis] * self.dim), indexing="ij")

    def lattice_axis(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.sampling_points_per_axis)

    def sample_points(self) -> np.ndarray:
        """Norm lattice for the polynomial backend, shape ``(m**d, d)``."""
        axis = np.linspace(0.0, 1.0, self.sampling_points_per_axis)
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def refined(self) -> "Domain":
        if not self.is_grid:
            raise BackendError("only grid domains can be refined")
        return replace(self, sites_per_axis=2 * self.sites_per_axis)


def multi_indices(dim: int, degree: int) -> list:
    return list(itertools.combinations(range(dim), degree))


# ---------------------------------------------------------------------------
# forms

Component = Union[np.ndarray, MatPoly]


@dataclass(frozen=True, eq=False)
class FormField:
    """Matrix-valued p-form.

    A form of degree ``p > dim`` has no components and is identically zero.

    ``components`` maps each increasing multi-index to a grid array or a
    :class:`MatPoly`.  ``source``, when set, regenerates the field on any
    grid domain and is what :func:`refine` resamples.
    """

    degree: int
    domain: Domain
    algebra: LieAlgebra
    components: dict
    source: Optional[Callable[[Domain], "FormField"]] = field(default=None, repr=False)

    def __post_init__(self):
        d, p = self.domain.dim, self.degree
        if p < 0:
            raise ValueError(f"negative degree {p}")
        keys = set(multi_indices(d, p))
        if set(self.components) != keys:
            raise ValueError(f"expected {comb(d, p)} components {sorted(keys)}")

    @property
    def value_shape(self) -> tuple:
        if not self.components:
            return (self.algebra.rep_dim, self.algebra.rep_dim)
        c = next(iter(self.components.values()))
        return c.value_shape if isinstance(c, MatPoly) else c.shape[-2:]

    def _with(self, components, degree=None) -> "FormField":
        return FormField(
            self.degree if degree is None else degree,
            self.domain,
            self.algebra,
            components,
        )

    def __add__(self, other: "FormField") -> "FormField":
        return add(self, other)

    def __sub__(self, other: "FormField") -> "FormField":
        _check_compatible(self, other, same_degree=True)
        return self._with({k: v - other.components[k] for k, v in self.components.items()})

    def __neg__(self) -> "FormField":
        return scale(-1.0, self)

    def __mul__(self, c: float) -> "FormField":
        return scale(c, self)

    __rmul__ = __mul__

    def __getitem__(self, index) -> Component:
        return self.components[tuple(index)]

    def values(self, index=None) -> np.ndarray:
        """Grid values (or polynomial samples on the norm lattice)."""
        comp = self.components[tuple(index) if index is not None else multi_indices(
            self.domain.dim, self.degree)[0]]
        if isinstance(comp, MatPoly):
            return comp(self.domain.sample_points())
        return comp

    def coefficient_array(self) -> np.ndarray:
        """Real algebra coefficients, shape ``(*grid, n_components, N)``.

        Grid backend only; this is the site-major flattening order used by the
        solver.
        """
        if not self.domain.is_grid:
            raise BackendError("coefficient arrays exist only on the grid backend")
        comps = [self.components[k] for k in multi_indices(self.domain.dim, self.degree)]
        return np.stack([self.algebra.coefficients(c) for c in comps], axis=-2)

    def conj_transpose(self) -> "FormField":
        return self._with({
            k: v.conj_transpose() if isinstance(v, MatPoly) else np.conj(np.swapaxes(v, -1, -2))
            for k, v in self.components.items()
        })


def _check_compatible(X: FormField, Y: FormField, same_degree: bool = False) -> None:
    if X.domain != Y.domain:
        raise BackendError(f"domain mismatch: {X.domain} vs {Y.domain}")
    if X.algebra.name != Y.algebra.name:
        raise BackendError(f"algebra mismatch: {X.algebra.name} vs {Y.algebra.name}")
    if same_degree and X.degree != Y.degree:
        raise BackendError(f"degree mismatch: {X.degree} vs {Y.degree}")


def _constant_component(domain: Domain, M) -> Component:
    M = np.asarray(M, dtype=complex)
    if domain.is_grid:
        return np.broadcast_to(M, domain.shape + M.shape).copy()
    return MatPoly.constant(domain.dim, M)


def zeros(domain: Domain, algebra: LieAlgebra, degree: int, value_shape=None) -> FormField:
    if value_shape is None:
        value_shape = (algebra.rep_dim, algebra.rep_dim)
    Z = np.zeros(value_shape, dtype=complex)
    return FormField(
        degree, domain, algebra,
        {k: _constant_component(domain, Z) for k in multi_indices(domain.dim, degree)},
    )


def constant_form(domain: Domain, algebra: LieAlgebra, degree: int, values: Mapping) -> FormField:
    """Form with constant matrix components; missing indices are zero."""
    n = algebra.rep_dim
    shape = None
    for v in values.values():
        shape = np.shape(v)
    Z = np.zeros(shape or (n, n), dtype=complex)
    comps = {
        k: _constant_component(domain, values.get(k, Z))
        for k in multi_indices(domain.dim, degree)
    }
    return FormField(degree, domain, algebra, comps)


def _scalar_component(domain: Domain, spec, coords=None):
    """Turn a scalar spec into a backend scalar (grid array or 1x1 MatPoly)."""
    if domain.is_grid:
        if callable(spec):
            vals = spec(coords if coords is not None else domain.coordinates())
        else:
            vals = spec
        return np.broadcast_to(np.asarray(vals, dtype=float), domain.shape)
    if isinstance(spec, MatPoly):
        return spec
    if isinstance(spec, Mapping):
        return scalar_poly(domain.dim, spec)
    if np.ndim(spec) == 0:
        return scalar_poly(domain.dim, {(0,) * domain.dim: float(spec)})
    raise TypeError(f"cannot build a polynomial scalar from {type(spec).__name__}")


def from_coefficients(
    domain: Domain,
    algebra: LieAlgebra,
    degree: int,
    coefficients: Mapping[tuple, Sequence],
) -> FormField:
    """Algebra-valued form ``sum_a c^a_I(x) J_a dx^I``.

    ``coefficients[I][a]`` is a scalar spec: a callable of the grid
    coordinate list or an array (grid), or a :class:`MatPoly`, exponent
    dictionary or number (polynomial).  ``None`` entries are zero.  If every
    grid spec is callable the form can later be refined.
    """
    N = algebra.dim
    gens = algebra.generators
    indices = multi_indices(domain.dim, degree)
    specs = {k: list(coefficients.get(k, [None] * N)) for k in indices}
    for k, row in specs.items():
        if len(row) != N:
            raise ValueError(f"component {k} needs {N} coefficients, got {len(row)}")

    coords = domain.coordinates() if domain.is_grid else None
    comps = {}
    for k, row in specs.items():
        total = None
        for a, spec in enumerate(row):
            if spec is None:
                continue
            s = _scalar_component(domain, spec, coords)
            if domain.is_grid:
                term = s[..., None, None] * gens[a]
            else:
                term = MatPoly(s.coef[..., 0, 0][..., None, None] * gens[a])
            total = term if total is None else total + term
        if total is None:
            total = _constant_component(domain, np.zeros_like(gens[0]))
        comps[k] = total

    source = None
    if domain.is_grid and all(
        callable(s) or s is None for row in specs.values() for s in row
    ):
        def source(dom, _c=coefficients):
            return from_coefficients(dom, algebra, degree, _c)
    return FormField(degree, domain, algebra, comps, source)


# ---------------------------------------------------------------------------
# operations


def _shuffles(M: tuple, p: int):
    """Split ``M`` into ``(I, J, sign)`` with ``|I| = p``."""
    for pos in itertools.combinations(range(len(M)), p):
        rest = [i for i in range(len(M)) if i not in pos]
        perm = list(pos) + rest
        inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
        yield (
            tuple(M[i] for i in pos),
            tuple(M[i] for i in rest),
            -1.0 if inv % 2 else 1.0,
        )


def wedge(X: FormField, Y: FormField) -> FormField:
    """Matrix wedge product ``X ^ Y`` (component products in order X, Y)."""
    _check_compatible(X, Y)
    p, q = X.degree, Y.degree
    if p + q > X.domain.dim:
        raise ValueError(f"wedge of degrees {p}+{q} exceeds dim {X.domain.dim}")
    out = {}
    for M in multi_indices(X.domain.dim, p + q):
        total = None
        for I, J, sign in _shuffles(M, p):
            term = X.components[I] @ Y.components[J]
            if sign < 0:
                term = -term
            total = term if total is None else total + term
        out[M] = total
    return FormField(p + q, X.domain, X.algebra, out)


def _partial(c: Component, axis: int, domain: Domain) -> Component:
    if isinstance(c, MatPoly):
        return c.partial(axis)
    h = domain.spacing
    return (np.roll(c, -1, axis=axis) - np.roll(c, 1, axis=axis)) / (2.0 * h)


def exterior_derivative(X: FormField) -> FormField:
    """``dX``; exact for polynomials, centred differences on the grid."""
    d, p = X.domain.dim, X.degree
    if p >= d:
        raise ValueError(f"cannot differentiate a {p}-form in dim {d}")
    out = {}
    for M in multi_indices(d, p + 1):
        total = None
        for k, mu in enumerate(M):
            term = _partial(X.components[M[:k] + M[k + 1:]], mu, X.domain)
            if k % 2:
                term = -term
            total = term if total is None else total + term
        out[M] = total
    return FormField(p + 1, X.domain, X.algebra, out)


def add(X: FormField, Y: FormField) -> FormField:
    _check_compatible(X, Y, same_degree=True)
    return X._with({k: v + Y.components[k] for k, v in X.components.items()})


def scale(c: float, X: FormField) -> FormField:
    return X._with({k: c * v for k, v in X.components.items()})


def l2_norm(X: FormField) -> float:
    """Root mean (over sites or the sampling lattice) of ``sum_I tr(C_I^dag C_I)``."""
    total = 0.0
    npts = 1
    for k in multi_indices(X.domain.dim, X.degree):
        c = X.components[k]
        vals = c.on_lattice(X.domain.lattice_axis()) if isinstance(c, MatPoly) else c
        sq = np.real(vals) ** 2 + np.imag(vals) ** 2
        total += float(np.sum(sq))
        npts = sq.size // int(np.prod(sq.shape[-2:]))
    return float(np.sqrt(total / npts))


def refine(X: FormField) -> FormField:
    """Resample a grid field on the doubled grid from its generator."""
    if not X.domain.is_grid:
        raise BackendError("refine is only defined for the grid backend")
    if X.source is None:
        raise BackendError("field has no analytic generator to resample")
    return X.source(X.domain.refined())


def sample_poly_to_grid(X: FormField, grid: Domain) -> FormField:
    """Evaluate polynomial components at the sites of ``grid``."""
    if X.domain.is_grid or not grid.is_grid:
        raise BackendError("expected a polynomial field and a grid domain")
    if X.domain.dim != grid.dim:
        raise BackendError(f"dimension mismatch: {X.domain.dim} vs {grid.dim}")
    pts = np.stack([c.ravel() for c in grid.coordinates()], axis=1)
    comps = {}
    for k, c in X.components.items():
        comps[k] = c(pts).reshape(grid.shape + c.value_shape)

    def source(dom, _X=X):
        return sample_poly_to_grid(_X, dom)
    return FormField(X.degree, grid, X.algebra, comps, source)


def inner(X: FormField, Y: FormField) -> float:
    """Mean over samples of ``sum_I Re tr(X_I^dag Y_I)``; pairs with :func:`l2_norm`."""
    _check_compatible(X, Y, same_degree=True)
    total = 0.0
    npts = 1
    for k in multi_indices(X.domain.dim, X.degree):
        a, b = X.components[k], Y.components[k]
        if isinstance(a, MatPoly):
            axis = X.domain.lattice_axis()
            a, b = a.on_lattice(axis), b.on_lattice(axis)
        total += float(np.sum(np.real(np.conj(a) * b)))
        npts = a.size // int(np.prod(a.shape[-2:]))
    return total / npts
