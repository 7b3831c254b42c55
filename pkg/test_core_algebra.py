import math

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from core_algebra import (
    IDENTITY,
    INF,
    Mobius,
    apply,
    compose,
    conj_by_R,
    digit_matrix,
    fixed_points,
    generators,
    group_params,
    inverse,
)
from config import precision_context
from errors import InvalidIndexError, SingularMatrixError

G = (1 + math.sqrt(5)) / 2


@pytest.fixture
def p3():
    return group_params(3)


def test_group_params_trace():
    assert group_params(3).t == pytest.approx(2.0)
    assert group_params(4).t == pytest.approx(1 + math.sqrt(2))
    assert group_params(6).t == pytest.approx(1 + math.sqrt(3))


@pytest.mark.parametrize("n", [2, 0, -5, 3.0, True])
def test_group_params_rejects_bad_index(n):
    with pytest.raises(InvalidIndexError):
        group_params(n)


def test_generators_action(p3):
    A, C, R = generators(p3)
    assert A.apply(0.0) == pytest.approx(2.0)
    assert C.apply(2.0) == pytest.approx(0.5)
    assert C.apply(0.0) is INF
    assert C.apply(INF) == pytest.approx(1.0)
    assert R.apply(2.0) == pytest.approx(-0.5)


def test_compose_and_inverse(p3):
    A, C, _ = generators(p3)
    assert inverse(A).apply(0.3 + p3.t) == pytest.approx(0.3)
    assert apply(compose(C, C), 3.0) == pytest.approx(-0.5)
    assert (C @ C @ C).projectively_equal(IDENTITY)


def test_epsilon_relation_n3(p3):
    A, C, _ = generators(p3)
    alpha = G / 2
    ell0, r0 = (alpha - 1) * p3.t, alpha * p3.t
    assert (A.inverse() @ C).apply(ell0) == pytest.approx(r0, abs=1e-12)


def test_singular_matrix():
    with pytest.raises(SingularMatrixError):
        Mobius(1.0, 2.0, 2.0, 4.0)


def test_conj_by_R(p3):
    A, C, _ = generators(p3)
    assert conj_by_R(A).projectively_equal(C.inverse() @ A @ C)
    assert conj_by_R(IDENTITY).projectively_equal(IDENTITY)
    M = digit_matrix(p3, 1, 1)
    assert conj_by_R(M).inverse().apply(-0.28) == pytest.approx(-M.apply(0.28))


@pytest.mark.parametrize("n", range(3, 13))
def test_A_commutes_with_CR(n):
    params = group_params(n)
    A, C, R = generators(params)
    assert (A @ C @ R).projectively_equal(C @ R @ A)


def test_fixed_points(p3):
    A, _, _ = generators(p3)
    assert fixed_points(A) == []
    points = fixed_points(digit_matrix(p3, 2, 1))
    small = min(points, key=lambda fp: fp.root)
    assert small.root == pytest.approx((5 - math.sqrt(21)) / 2)
    assert small.kind == 'repelling'
    assert max(points, key=lambda fp: fp.root).kind == 'attracting'


def test_elliptic_has_no_fixed_point(p3):
    _, C, _ = generators(p3)
    assert fixed_points(C) == []


letters = st.tuples(st.integers(-5, 5), st.sampled_from([1, 2]))



LONG_WORDS = [
    [(0, 1)] + [(2, 1)] * 3 + [(3, 1)] * 2 + [(4, 1)] * 3 + [(5, 1), (3, 1)],
    [(5, 1), (-5, 2)] * 6,
]


def _word_matrix(params, word):
    m = IDENTITY
    for k, l in word:
        m = digit_matrix(params, k, l) @ m
    return m


@pytest.mark.parametrize("word", LONG_WORDS)
def test_long_words_keep_unit_determinant(word):
    m = _word_matrix(group_params(3), word)
    assert m.det == 1
    assert max(abs(v) for v in m.entries()) > 1e6
    with precision_context(200):
        exact = _word_matrix(group_params(3, 200), word)
        for u, v in zip(m.entries(), exact.entries()):
            assert u == pytest.approx(float(v), rel=1e-12)
    assert m.inverse().det == 1
    assert conj_by_R(m).det == 1


@pytest.mark.parametrize("word", LONG_WORDS)
def test_long_words_fixed_points(word):
    m = _word_matrix(group_params(3), word)
    points = fixed_points(m)
    assert len(points) == 2
    attracting = [fp for fp in points if fp.kind == 'attracting']
    assert attracting
    x = attracting[0].root
    assert m.apply(x) == pytest.approx(x, rel=1e-9, abs=1e-9)


def test_singular_relative_to_norm():
    with pytest.raises(SingularMatrixError):
        Mobius(1.0, 1.0, 1.0, 1.0 + 1e-15)
    assert Mobius(2.0, 0.0, 0.0, 2.0).normalize().det == pytest.approx(1.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(letters, min_size=1, max_size=12), st.floats(-10, 10))
def test_round_trip(word, x):
    with precision_context(200):
        params = group_params(3, 200)
        m = _word_matrix(params, word)
        x = mpmath.mpf(x)
        assume(abs(m.denominator(x)) > 1e-3)
        y = m.apply(x)
        assume(abs(y) < 1e6)
        back = m.inverse().apply(y)
        assert abs(back - x) < 1e-20


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=8), st.floats(-3, 3))
def test_reversal_law(powers, x2):
    params = group_params(3)
    mats = [digit_matrix(params, p, 1) for p in powers]
    X, reverse = IDENTITY, IDENTITY
    for m in mats:
        X = X @ m
        reverse = m @ reverse
    scale = max(abs(v) for v in reverse.entries())
    assume(abs(reverse.denominator(x2)) > 1e-3 * scale * (1 + abs(x2)))
    x1 = reverse.apply(x2)
    assert conj_by_R(X).inverse().apply(-x2) == pytest.approx(-x1, rel=1e-9, abs=1e-9)
