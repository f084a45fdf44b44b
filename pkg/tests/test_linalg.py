import numpy as np
import pytest

from mrlgp.exceptions import NumericalError
from mrlgp.linalg import JITTER_MAX, factorize, gaussian_logpdf, psd_sqrt

from oracles import mvn_logpdf


def test_factorize_pd_without_jitter():
    A = np.array([[2.0, 0.3], [0.3, 1.0]])
    f = factorize(A)
    assert f.jitter == 0.0
    np.testing.assert_allclose(f.L @ f.L.T, A, atol=1e-15)
    np.testing.assert_allclose(f.solve(np.eye(2)) @ A, np.eye(2), atol=1e-12)
    assert f.logdet() == pytest.approx(np.log(np.linalg.det(A)), abs=1e-12)


def test_rank_deficient_gets_smallest_sufficient_jitter():
    v = np.array([1.0, 2.0, 3.0])
    f = factorize(np.outer(v, v))
    assert 0 < f.jitter <= JITTER_MAX


def test_indefinite_matrix_raises():
    with pytest.raises(NumericalError):
        factorize(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_empty_matrix():
    f = factorize(np.zeros((0, 0)))
    assert f.n == 0
    assert gaussian_logpdf(np.zeros(0), f) == 0.0


def test_logpdf_matches_dense_formula():
    rng = np.random.default_rng(1)
    B = rng.normal(size=(5, 5))
    K = B @ B.T + np.eye(5)
    y = rng.normal(size=5)
    assert gaussian_logpdf(y, factorize(K)) == pytest.approx(mvn_logpdf(y, K), abs=1e-10)


def test_psd_sqrt_and_pseudo_inverse():
    rng = np.random.default_rng(2)
    B = rng.normal(size=(4, 2))
    S = B @ B.T  # rank 2
    R = psd_sqrt(S)
    np.testing.assert_allclose(R @ R, S, atol=1e-12)
    P = psd_sqrt(S, pinv=True)
    np.testing.assert_allclose(P @ P, np.linalg.pinv(S), atol=1e-10)
    assert psd_sqrt(np.array([[4.0]]))[0, 0] == 2.0
    assert psd_sqrt(np.array([[4.0]]), pinv=True)[0, 0] == 0.5
    assert psd_sqrt(np.array([[0.0]]), pinv=True)[0, 0] == 0.0
