from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from backend.engine.errors import ExponentError
from backend.engine.exponents import (
    INF, ONE, Exponent, HolderCase, conjugate, holder_r, nuclear_t, parse_rational,
)

finite_exponents = st.fractions(min_value=1, max_value=50, max_denominator=64).map(Exponent)
exponents = st.one_of(st.just(INF), finite_exponents)


@pytest.mark.parametrize("text, expected", [
    ("inf", None),
    ("∞", None),
    ("3/2", Fraction(3, 2)),
    ("1.25", Fraction(5, 4)),
    (2, Fraction(2)),
    (1.5, Fraction(3, 2)),
])
def test_parse(text, expected):
    assert Exponent.parse(text).value == expected


@pytest.mark.parametrize("text", ["1/2", "0", "abc", "", "1/0"])
def test_parse_rejects(text):
    with pytest.raises(ExponentError):
        Exponent.parse(text)


def test_decimals_parse_exactly():
    assert parse_rational("0.1") == Fraction(1, 10)
    assert parse_rational(0.1) == Fraction(1, 10)


def test_ordering_puts_infinity_last():
    assert ONE < Exponent.parse("3/2") < INF
    assert not INF < INF
    assert max(Exponent.parse(2), INF) == INF


@pytest.mark.parametrize("p, expected", [("2", "2"), ("1", "inf"), ("inf", "1"), ("4", "4/3")])
def test_conjugate(p, expected):
    assert str(conjugate(p)) == expected


@given(exponents)
def test_conjugate_is_an_involution(p):
    assert conjugate(conjugate(p)) == p


@given(exponents)
def test_reciprocal_identity_is_exact(p):
    assert p.reciprocal + conjugate(p).reciprocal == 1


def test_holder_r():
    assert holder_r(6, 1, 2).r == Exponent(Fraction(3, 2))
    assert holder_r(2, 2, 3).case is HolderCase.BOUNDED
    assert holder_r("inf", 1, 3).r == ONE


def test_holder_boundary_is_bounded():
    assert holder_r(4, 2, 2).case is HolderCase.BOUNDED
    assert holder_r(Fraction(401, 100), 2, 2).r.value == 802


@pytest.mark.parametrize("p, q, n, expected", [
    ("2", "2", 2, "1"),
    ("4/3", "4", 2, "4/3"),
    ("1", "3", 5, "3"),
    ("1", "inf", 2, "inf"),
])
def test_nuclear_t(p, q, n, expected):
    assert str(nuclear_t(p, q, n)) == expected


@given(exponents, exponents, st.integers(min_value=1, max_value=6))
def test_nuclear_t_never_exceeds_q(p, q, n):
    t = nuclear_t(p, q, n)
    assert ONE <= t <= q


@pytest.mark.parametrize("n", [0, -1, 1.5, True])
def test_arity_must_be_positive_integer(n):
    with pytest.raises(ExponentError):
        nuclear_t(2, 2, n)
