import itertools

import pytest

from core_algebra import IDENTITY, digit_matrix, generators, group_params
from errors import InvalidWordError, UnsupportedCaseError
from interval_dynamics import Digit
from word_machinery import (
    Word,
    digit_word_large,
    digit_word_small,
    is_self_dominant,
    matrix_L_large,
    matrix_L_small,
    matrix_R_large,
    matrix_R_small,
    order_digits,
    order_words,
    parent_of,
    parse_word,
    theta,
    v_prime,
)


@pytest.fixture
def p3():
    return group_params(3)


def test_parse_word():
    assert parse_word("1 2 1").letters == (1, 2, 1)
    assert parse_word("3,1,3").letters == (3, 1, 3)
    assert parse_word((2,)).s == 1


@pytest.mark.parametrize("text, position", [("0", 1), ("1 x 1", 2), ("1 2", 2), ("1 -1 1", 2)])
def test_parse_word_errors(text, position):
    with pytest.raises(InvalidWordError) as exc:
        parse_word(text)
    assert exc.value.position == position


def test_parse_word_empty():
    with pytest.raises(InvalidWordError):
        parse_word("  ")


def test_digit_word_small():
    assert digit_word_small(1, "1").simplified() == (1,)
    assert digit_word_small(1, "2").simplified() == (1, 1)
    assert digit_word_small(2, "1 1 1").simplified() == (2, 3, 2)
    with pytest.raises(InvalidWordError):
        digit_word_small(0, "1")


def test_matrix_R_small_11(p3):
    A, C, _ = generators(p3)
    assert matrix_R_small(p3, 1, "1").projectively_equal(A @ C)


def test_matrix_L_small_11(p3):
    A, C, _ = generators(p3)
    Ai = A.inverse()
    expected = Ai @ C @ Ai @ Ai @ C @ Ai @ Ai @ C @ Ai @ C @ Ai
    L = matrix_L_small(p3, 1, "1")
    assert L.projectively_equal(expected)
    assert L.projectively_equal(C.inverse() @ A @ C @ matrix_R_small(p3, 1, "1"))


def test_large_words_n3(p3):
    A, C, _ = generators(p3)
    Ai = A.inverse()
    assert matrix_L_large(p3, 2, "1").projectively_equal(A.power(-2) @ C @ Ai)
    assert matrix_R_large(p3, 2, "1").projectively_equal(A @ C @ A @ C @ C)
    assert matrix_R_large(p3, 1, "1").projectively_equal(IDENTITY)

    words = digit_word_large(2, "1", 3)
    assert words.upper.symbols == (Digit(1, 2), Digit(1, 1))
    assert words.e == 1
    assert digit_word_large(1, "1", 3).upper.symbols == ()


def test_large_level_one_restriction():
    with pytest.raises(InvalidWordError):
        digit_word_large(1, "2", 3)
    with pytest.raises(InvalidWordError):
        digit_word_large(1, "1 1 1", 3)
    digit_word_large(1, "1", 4)


def test_upper_word_matches_matrix(p3):
    words = digit_word_large(2, "1", 3)
    m = IDENTITY
    for d in words.upper.symbols:
        m = digit_matrix(p3, d.k, d.l) @ m
    assert m.projectively_equal(matrix_R_large(p3, 2, "1"))


def test_order_words():
    assert order_words("1", "2") == -1
    assert order_words("1 2 1", "1 1 1") == -1
    assert order_words("1", "1 1 1") == 0


def _words(max_len, max_letter=3):
    for size in range(1, max_len + 1, 2):
        for letters in itertools.product(range(1, max_letter + 1), repeat=size):
            yield Word(letters)


def test_order_consistency_with_digit_words():
    words = list(_words(5))
    for v1, v2 in itertools.combinations(words, 2):
        expected = order_words(v1, v2)
        if expected == 0:
            continue
        observed = order_digits(digit_word_small(1, v1), digit_word_small(1, v2))
        assert observed in (expected, 0)


def test_self_dominance():
    assert is_self_dominant("1")
    assert is_self_dominant("2 1 2")
    assert is_self_dominant("1 1 1")
    assert not is_self_dominant("1 2 3")


def test_v_prime():
    assert v_prime("3") == (1, 2)
    assert v_prime("1 2 1") == (3, 1)
    with pytest.raises(UnsupportedCaseError):
        v_prime("1")


def test_theta_lengths():
    v = Word((2, 1, 2))
    assert parent_of(v) == Word((2,))
    for q in range(4):
        w = theta(v, q)
        assert len(w) == len(v) + q * len(v_prime(v)) + (len(v) - 1)
        assert w.letters[:len(v)] == v.letters


def test_theta_requires_parent():
    with pytest.raises(UnsupportedCaseError):
        theta("3", 1)
    with pytest.raises(InvalidWordError):
        theta("2 1 2", -1)
