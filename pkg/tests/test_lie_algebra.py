import numpy as np
import pytest
from hypothesis import given, strategies as st

from connection_lab.lie_algebra import (
    AlgebraValue,
    ConfigurationError,
    anticommutator,
    commutator,
    exp_map,
    inner_product,
    make_algebra,
)

NAMES = ["u1", "su2", "su3"]
coeff = st.floats(-3, 3, allow_nan=False)


@pytest.mark.parametrize("name", NAMES)
def test_validate_passes(name):
    checks = make_algebra(name).validate()
    assert all(v <= 1e-13 for v in checks.values())


def test_unknown_algebra():
    with pytest.raises(ConfigurationError):
        make_algebra("so5")


def _table(rows, n):
    f = np.zeros((n, n, n))
    for a, b, c, v in rows:
        for (i, j, k), s in (((a, b, c), 1), ((b, c, a), 1), ((c, a, b), 1),
                             ((b, a, c), -1), ((a, c, b), -1), ((c, b, a), -1)):
            f[i - 1, j - 1, k - 1] = s * v
    return f


def test_su2_structure_constants_frozen(frozen):
    f = _table(frozen["su2_structure"], 3)
    assert np.allclose(make_algebra("su2").structure_constants, f, atol=1e-15)


def test_su3_structure_constants_frozen(frozen):
    f = _table(frozen["su3_structure"], 8)
    assert np.allclose(make_algebra("su3").structure_constants, f, atol=1e-14)


def test_u1_is_abelian():
    u1 = make_algebra("u1")
    assert u1.is_abelian and u1.dim == 1
    assert np.all(u1.structure_constants == 0)


@pytest.mark.parametrize("name", ["su2", "su3"])
@given(data=st.data())
def test_bracket_matches_matrices(name, data):
    alg = make_algebra(name)
    x = np.array(data.draw(st.lists(coeff, min_size=alg.dim, max_size=alg.dim)))
    y = np.array(data.draw(st.lists(coeff, min_size=alg.dim, max_size=alg.dim)))
    X, Y = AlgebraValue(alg, x), AlgebraValue(alg, y)
    Z = commutator(X, Y)
    M = X.matrix @ Y.matrix - Y.matrix @ X.matrix
    assert np.allclose(Z.matrix, M, atol=1e-12)
    assert np.allclose(commutator(Y, X).coeffs, -Z.coeffs, atol=1e-12)


@given(st.lists(coeff, min_size=3, max_size=3))
def test_exp_is_unitary_and_inverse(c):
    alg = make_algebra("su2")
    X = AlgebraValue(alg, np.array(c))
    g = exp_map(X)
    assert np.allclose(g @ g.conj().T, np.eye(2), atol=1e-12)
    assert np.allclose(g @ exp_map(-X), np.eye(2), atol=1e-12)
    assert abs(np.linalg.det(g) - 1) < 1e-12


def test_inner_product_orthogonal_basis():
    alg = make_algebra("su3")
    G = np.array([[inner_product(AlgebraValue(alg, np.eye(8)[a]), AlgebraValue(alg, np.eye(8)[b]))
                   for b in range(8)] for a in range(8)])
    assert np.allclose(G, 0.5 * np.eye(8), atol=1e-15)


def test_coefficients_round_trip():
    alg = make_algebra("su2")
    c = np.array([0.3, -1.2, 2.0])
    assert np.allclose(alg.coefficients(alg.matrix(c)), c, atol=1e-15)
    assert np.allclose(AlgebraValue.from_matrix(alg, alg.matrix(c)).coeffs, c)


def test_anticommutator_of_su2_generators():
    alg = make_algebra("su2")
    J = [AlgebraValue(alg, e) for e in np.eye(3)]
    # J_a = -i sigma_a / 2 so {J_a, J_b} = -delta_ab / 2
    assert np.allclose(anticommutator(J[0], J[0]), -0.5 * np.eye(2))
    assert np.allclose(anticommutator(J[0], J[1]), 0)


def test_mismatched_algebras():
    with pytest.raises(TypeError):
        commutator(AlgebraValue(make_algebra("su2"), np.ones(3)), AlgebraValue(make_algebra("u1"), np.ones(1)))
