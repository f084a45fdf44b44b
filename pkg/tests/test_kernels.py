import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrlgp.exceptions import ParameterError, UnsupportedOperationError
from mrlgp.kernels import (LengthScaleTable, constant, eval_d1, eval_d12, evaluate, gibbs,
                           gibbs_prefactor, gram, gram_d1, gram_d12, squared_exponential,
                           white_noise, zero)

from oracles import se, se_d12, se_dx2

coords = st.floats(-50, 50, allow_nan=False)
lengths = st.floats(0.1, 30)
heights = st.floats(0.01, 10)


def test_se_values():
    k = squared_exponential(1.0, 1.0)
    assert evaluate(k, 0.0, 1.0) == pytest.approx(math.exp(-1.0), abs=1e-15)
    assert evaluate(k, 2.0, 2.0) == 1.0
    assert evaluate(squared_exponential(3.0, 2.0), 0.0, 2.0) == pytest.approx(3 * math.exp(-1))


def test_se_derivative_values():
    k = squared_exponential(1.0, 1.0)
    assert eval_d12(k, 0.3, 0.3) == pytest.approx(2.0)
    assert eval_d1(k, 0.3, 0.3) == 0.0


@given(coords, coords, heights, lengths)
def test_se_matches_elementwise_oracle(a, b, mu, L):
    k = squared_exponential(mu, L)
    assert evaluate(k, a, b) == pytest.approx(se(a, b, mu, L), rel=1e-12, abs=1e-300)
    assert eval_d12(k, a, b) == pytest.approx(se_d12(a, b, mu, L), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("spec", [squared_exponential(1.3, 2.0),
                                  gibbs((3.0, 1.5), (0.5,), mu=2.0)])
def test_derivatives_match_finite_differences(spec):
    h = 1e-5
    for a, b in [(0.1, 0.9), (-0.7, 0.2), (1.4, 1.1)]:
        # d/d x2 of k(x1, x2)
        fd1 = (evaluate(spec, a, b + h) - evaluate(spec, a, b - h)) / (2 * h)
        assert gram_d1(spec, [b], [a])[0, 0] == pytest.approx(fd1, rel=1e-6, abs=1e-9)
        fd12 = (evaluate(spec, a + h, b + h) - evaluate(spec, a + h, b - h)
                - evaluate(spec, a - h, b + h) + evaluate(spec, a - h, b - h)) / (4 * h * h)
        assert gram_d12(spec, [a], [b])[0, 0] == pytest.approx(fd12, rel=1e-4, abs=1e-6)


def test_gram_d1_orientation_matches_oracle():
    spec = squared_exponential(1.0, 1.5)
    X = np.array([-1.0, 0.2, 2.0])
    D = gram_d1(spec, [0.5], X)  # rows: derivative location
    np.testing.assert_allclose(D[0], [se_dx2(x, 0.5, 1.0, 1.5) for x in X], rtol=1e-12)


def test_gibbs_lengthscale_lookup():
    table = LengthScaleTable((130.0,), (35.0, 15.0))
    assert table(130.0) == 35.0
    assert table(130.001) == 15.0
    assert table(0.0) == 35.0 and table(260.0) == 15.0


def test_gibbs_prefactor_across_change_point():
    spec = gibbs((35.0, 15.0), (130.0,))
    expected = math.sqrt(2 * 35 * 15 / (35 ** 2 + 15 ** 2))
    assert gibbs_prefactor(spec, 100.0, 200.0) == pytest.approx(0.850963, abs=1e-6)
    assert gibbs_prefactor(spec, 100.0, 200.0) == pytest.approx(expected, rel=1e-14)
    assert gibbs_prefactor(spec, 10.0, 20.0) == 1.0


def test_gibbs_with_constant_scale():
    # exp(-d^2 / (2 l^2)): the SE form with L = sqrt(2) l
    assert evaluate(gibbs((1.7,)), 0.4, 1.9) == pytest.approx(math.exp(-1.5 ** 2 / (2 * 1.7 ** 2)),
                                                             rel=1e-14)
    X = np.linspace(-3, 3, 9)
    np.testing.assert_allclose(gram(gibbs((1.7,)), X).values,
                               gram(squared_exponential(1.0, 1.7 * math.sqrt(2)), X).values,
                               rtol=1e-13)


@given(st.lists(coords, min_size=1, max_size=12, unique=True), heights, lengths)
def test_gram_symmetric_psd(xs, mu, L):
    K = gram(squared_exponential(mu, L), xs).values
    np.testing.assert_array_equal(K, K.T)
    assert np.linalg.eigvalsh(K).min() >= -1e-9 * mu * len(xs)


@given(st.lists(coords, min_size=1, max_size=12, unique=True))
def test_gibbs_gram_psd(xs):
    K = gram(gibbs((5.0, 1.0, 3.0), (-10.0, 10.0)), xs).values
    np.testing.assert_allclose(K, K.T, atol=0)
    assert np.linalg.eigvalsh(K).min() >= -1e-9 * len(xs)


def test_simple_families():
    X = np.array([0.0, 1.0, 2.0])
    np.testing.assert_array_equal(gram(constant(2.5), X).values, np.full((3, 3), 2.5))
    np.testing.assert_array_equal(gram(zero(), X).values, np.zeros((3, 3)))
    np.testing.assert_array_equal(gram(white_noise(0.3), X).values, 0.3 * np.eye(3))


def test_white_noise_has_no_derivatives():
    with pytest.raises(UnsupportedOperationError):
        gram_d1(white_noise(1.0), [0.0], [1.0])
    assert not white_noise(1.0).differentiable


@pytest.mark.parametrize("make", [lambda: squared_exponential(1.0, 0.0),
                                  lambda: squared_exponential(-1.0, 1.0),
                                  lambda: white_noise(-0.1),
                                  lambda: gibbs((1.0, 2.0), ())])
def test_invalid_parameters(make):
    with pytest.raises(ParameterError):
        make()
