import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densegen.diophantine import (
    SignMode,
    continued_fraction,
    convergents,
    kronecker_approx,
    looks_rational,
    positive_combination,
    scalar_word,
)
from densegen.errors import NotFoundWithinBound
from densegen.generators import casen2_pair
from densegen.words import Word, evaluate_word


def brute_kronecker(theta, rho, eps, bound=10 ** 4):
    ms = np.arange(-bound, bound + 1, dtype=float)
    r = rho - ms * theta
    err = np.abs(r - np.round(r))
    return bool((err < eps).any())


def test_continued_fraction_sqrt2():
    assert continued_fraction(math.sqrt(2), 6) == [1, 2, 2, 2, 2, 2]
    assert list(convergents(math.sqrt(2), 4)) == [(1, 1), (3, 2), (7, 5), (17, 12)]


def test_looks_rational():
    assert looks_rational(0.375) == 3 / 8
    assert looks_rational(math.sqrt(2)) is None


def test_exact_representation():
    assert kronecker_approx(math.sqrt(2), 3 * math.sqrt(2) + 2, 1e-9) == (3, 2)


def test_half_against_brute_force():
    m, n = kronecker_approx(math.sqrt(2), 0.5, 1e-4)
    assert abs(0.5 - m * math.sqrt(2) - n) < 1e-4
    assert brute_kronecker(math.sqrt(2), 0.5, 1e-4, 10 ** 5)


def test_rational_theta_rejected():
    with pytest.raises(ValueError):
        kronecker_approx(0.25, 0.1, 1e-3)


def test_positive_mode():
    alpha, beta, gamma = math.log(8 / 3), math.log(4 / 9), 0.8 * math.log(2)
    k, l = kronecker_approx((alpha, beta), gamma, 1e-3, SignMode.PositiveCoefficients)
    assert k >= 1 and l >= 1
    assert abs(k * alpha + l * beta - gamma) < 1e-3
    # brute force over k, l <= 1e4 confirms small solutions exist
    ls = np.arange(1, 10 ** 4 + 1)
    ks = np.round((gamma - ls * beta) / alpha)
    ok = (ks >= 1) & (np.abs(ks * alpha + ls * beta - gamma) < 1e-3)
    assert ok.any() and l <= ls[ok][0]


def test_positive_combination_min_l():
    k, l = positive_combination(math.log(8 / 3), math.log(4 / 9), 0.0, 1e-4, min_l=50)
    assert l >= 50


def test_scalar_words():
    pair = casen2_pair()
    for d, eps in ((-1.0, 0.05), (4.0, 0.1), (-2.0, 0.05)):
        w = scalar_word(d, eps)
        assert np.linalg.norm(evaluate_word(w, pair) - d * np.eye(2)) < eps


def test_c_word_is_not_scalar():
    C = evaluate_word(Word.parse("ABA3BA"), casen2_pair())
    assert np.allclose(C, np.diag([4 / 9, 1.0]))
    assert not np.allclose(C, C[0, 0] * np.eye(2))


def test_scalar_word_rejects_zero():
    with pytest.raises(ValueError):
        scalar_word(0.0, 0.1)


def test_scalar_word_reports_floor():
    # far below the double-precision floor of these words
    with pytest.raises(NotFoundWithinBound) as info:
        scalar_word(-7.5, 1e-9)
    assert info.value.best_error >= 1e-9


@settings(max_examples=60, deadline=None)
@given(theta=st.floats(0.01, 10), rho=st.floats(-5, 5), eps=st.sampled_from([1e-2, 1e-3, 1e-4]))
def test_kronecker_bound_and_solvability(theta, rho, eps):
    if looks_rational(theta) is not None:
        return
    try:
        m, n = kronecker_approx(theta, rho, eps)
    except NotFoundWithinBound:
        assert not brute_kronecker(theta, rho, eps)
        return
    assert abs(rho - m * theta - n) < eps
