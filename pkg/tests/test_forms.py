import numpy as np
import pytest
from hypothesis import given, strategies as st

from connection_lab.forms import (
    BackendError,
    Domain,
    MatPoly,
    constant_form,
    exterior_derivative,
    from_coefficients,
    inner,
    l2_norm,
    multi_indices,
    refine,
    sample_poly_to_grid,
    scalar_poly,
    wedge,
    zeros,
)
from connection_lab.lie_algebra import make_algebra
from connection_lab.randomfields import make_rng, random_form

su2 = make_algebra("su2")
seeds = st.integers(0, 2**32 - 1)


def test_multi_indices_counts():
    assert multi_indices(3, 2) == [(0, 1), (0, 2), (1, 2)]
    assert multi_indices(2, 0) == [()]
    assert multi_indices(2, 3) == []


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain.grid(2, 7)
    with pytest.raises(ValueError):
        Domain.grid(5, 8)
    assert Domain.grid(2, 8).spacing == 0.125


def test_matpoly_product_and_derivative():
    # p = 1 + 2x, q = 3y: p q = 3y + 6xy ; d/dx (pq) = 6y
    p = scalar_poly(2, {(0, 0): 1.0, (1, 0): 2.0})
    q = scalar_poly(2, {(0, 1): 3.0})
    pq = p @ q
    pts = np.array([[0.3, -0.7], [1.5, 2.0]])
    assert np.allclose(pq(pts)[:, 0, 0], (1 + 2 * pts[:, 0]) * 3 * pts[:, 1])
    assert np.allclose(pq.partial(0)(pts)[:, 0, 0], 6 * pts[:, 1])
    assert pq.partial(0).partial(0).extents == (1, 1)


def test_matpoly_fft_path_matches_direct():
    rng = np.random.default_rng(0)
    a = MatPoly(rng.standard_normal((40, 40, 2, 2)))
    b = MatPoly(rng.standard_normal((20, 20, 2, 2)))
    c = a @ b
    pts = rng.uniform(-0.5, 0.5, (5, 2))
    ref = np.einsum("pij,pjk->pik", a(pts), b(pts))
    assert np.allclose(c(pts), ref, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("backend", ["grid", "polynomial"])
@given(seed=seeds)
def test_dd_vanishes(backend, seed):
    dom = Domain.grid(3, 8) if backend == "grid" else Domain.polynomial(3)
    A = random_form(dom, su2, 1, make_rng(seed), poly_degree=3)
    ddA = exterior_derivative(exterior_derivative(A))
    assert l2_norm(ddA) <= 1e-12 * (1 + l2_norm(A)) * (1 if backend == "polynomial" else 64)


@given(seed=seeds)
def test_polynomial_leibniz(seed):
    dom = Domain.polynomial(3)
    rng = make_rng(seed)
    X = random_form(dom, su2, 1, rng, poly_degree=2)
    Y = random_form(dom, su2, 1, rng, poly_degree=2)
    lhs = exterior_derivative(wedge(X, Y))
    rhs = wedge(exterior_derivative(X), Y) - wedge(X, exterior_derivative(Y))
    assert l2_norm(lhs - rhs) <= 1e-12 * (1 + l2_norm(lhs))


@pytest.mark.parametrize("backend", ["grid", "polynomial"])
@given(seed=seeds)
def test_wedge_associative_and_adjoint(backend, seed):
    dom = Domain.grid(3, 4) if backend == "grid" else Domain.polynomial(3)
    rng = make_rng(seed)
    X, Y, Z = (random_form(dom, su2, 1, rng, poly_degree=1) for _ in range(3))
    left = wedge(wedge(X, Y), Z)
    right = wedge(X, wedge(Y, Z))
    assert l2_norm(left - right) <= 1e-12 * (1 + l2_norm(left))
    # (X^Y)^dag = -(Y^dag ^ X^dag) for 1-forms
    adj = wedge(X, Y).conj_transpose() + wedge(Y.conj_transpose(), X.conj_transpose())
    assert l2_norm(adj) <= 1e-12


def test_wedge_sign_convention():
    dom = Domain.polynomial(2)
    J = su2.generators
    X = constant_form(dom, su2, 1, {(0,): J[0]})
    Y = constant_form(dom, su2, 1, {(1,): J[1]})
    W = wedge(X, Y)
    assert np.allclose(W.values((0, 1)), J[0] @ J[1])
    assert np.allclose(wedge(Y, X).values((0, 1)), -J[1] @ J[0])


def test_degree_overflow():
    dom = Domain.polynomial(2)
    X = constant_form(dom, su2, 2, {(0, 1): su2.generators[0]})
    with pytest.raises(ValueError):
        exterior_derivative(X)


def test_backend_mismatch():
    A = zeros(Domain.grid(2, 8), su2, 1)
    B = zeros(Domain.polynomial(2), su2, 1)
    with pytest.raises(BackendError):
        A + B


def test_inner_matches_norm():
    A = random_form(Domain.grid(2, 8), su2, 1, make_rng(4))
    assert np.isclose(inner(A, A), l2_norm(A) ** 2)


def test_refine_and_sampling_agree():
    dom = Domain.grid(2, 8)
    phi = lambda x: np.sin(2 * np.pi * x[0]) * np.cos(2 * np.pi * x[1])  # noqa: E731
    X = from_coefficients(dom, su2, 1, {(0,): [phi, None, None]})
    Xf = refine(X)
    assert Xf.domain.sites_per_axis == 16
    assert np.allclose(Xf.values((0,))[::2, ::2], X.values((0,)))
    P = from_coefficients(Domain.polynomial(2), su2, 0, {(): [{(1, 1): 2.0}, None, None]})
    G = sample_poly_to_grid(P, dom)
    x0, x1 = dom.coordinates()
    assert np.allclose(G.values(()), (2 * x0 * x1)[..., None, None] * su2.generators[0])


def test_grid_derivative_second_order():
    errs = []
    for n in (8, 16, 32):
        dom = Domain.grid(2, n)
        X = from_coefficients(dom, su2, 0, {(): [lambda x: np.sin(2 * np.pi * x[0]), None, None]})
        dX = exterior_derivative(X)
        x0 = dom.coordinates()[0]
        exact = (2 * np.pi * np.cos(2 * np.pi * x0))[..., None, None] * su2.generators[0]
        errs.append(np.max(np.abs(dX.values((0,)) - exact)))
    order = np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])
    assert min(order) > 1.95
