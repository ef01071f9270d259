import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from connection_lab.copies import ALL_COPIES, ENDPOINTS_ONLY
from connection_lab.estimators import CopyFinder, InfinitesimalCopyFinder, LineClassifier
from connection_lab.forms import Domain, l2_norm, zeros
from connection_lab.lie_algebra import make_algebra
from connection_lab.randomfields import make_rng, random_form
from connection_lab.witnesses import single_generator_pair, stabilizer_pair

su2 = make_algebra("su2")


def test_params_and_clone():
    est = LineClassifier(tol=1e-6)
    assert est.get_params() == {"tol": 1e-6}
    assert clone(est.set_params(tol=1e-3)).tol == 1e-3
    assert CopyFinder().get_params()["max_iterations"] == 200
    assert InfinitesimalCopyFinder(n_directions=3).get_params()["n_directions"] == 3


def test_line_classifier():
    clf = LineClassifier().fit(*single_generator_pair(Domain.polynomial(2), su2))
    assert clf.verdict_ == ALL_COPIES and clf.tol_ == 1e-8
    assert clf.predict([0.2, 0.5, 3.0]).all()
    clf = LineClassifier().fit(*stabilizer_pair(Domain.polynomial(2), su2))
    assert clf.verdict_ == ENDPOINTS_ONLY
    assert list(clf.predict([0.0, 0.5, 1.0])) == [True, False, True]


def test_not_fitted():
    with pytest.raises(NotFittedError):
        LineClassifier().predict([0.5])


def test_input_validation():
    dom = Domain.polynomial(2)
    with pytest.raises(TypeError):
        LineClassifier().fit(np.zeros(3), zeros(dom, su2, 1))
    with pytest.raises(ValueError):
        LineClassifier().fit(zeros(dom, su2, 2), zeros(dom, su2, 1))
    with pytest.raises(TypeError):
        LineClassifier().fit(zeros(dom, su2, 1), zeros(Domain.grid(2, 8), su2, 1))
    with pytest.raises(TypeError):
        CopyFinder().fit(zeros(dom, su2, 1), zeros(dom, su2, 1))


def test_infinitesimal_finder_transform():
    dom = Domain.grid(2, 8)
    est = InfinitesimalCopyFinder(n_directions=6).fit(zeros(dom, su2, 1))
    assert est.n_null_ == 6
    proj = est.transform(est.directions_[0])
    assert proj[0] == pytest.approx(1.0)
    assert np.allclose(proj[1:], 0, atol=1e-10)


def test_copy_finder():
    dom = Domain.grid(2, 8)
    A, K = stabilizer_pair(dom, su2)
    noise = random_form(dom, su2, 1, make_rng(1))
    est = CopyFinder().fit(A, K + (0.01 * l2_norm(K) / l2_norm(noise)) * noise)
    assert est.report_.residual_copy <= 1e-10
    assert est.n_iter_ == len(est.history_) <= 50
    assert l2_norm(est.transform(A) - (A + est.copy_)) == 0.0
