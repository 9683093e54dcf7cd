from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backend.engine.errors import DomainError
from backend.engine.exponents import INF, Exponent
from backend.engine.classify import (
    IDEALS, Classification, Ideal, Marker, SpaceTag, classify_forms, classify_operators,
    coincidence_tables, growth_scan, power_membership, render_chain, tables_from_classification,
)


def tag(text: str) -> SpaceTag:
    """'c0', 'linf', 'u' for l_u, '[a,b]' for the bracket l_a <= . <= l_{b+eps}"""
    if text == "c0":
        return SpaceTag.c0()
    if text == "linf":
        return SpaceTag.linf()
    if text.startswith("["):
        a, b = text[1:-1].split(",")
        return SpaceTag.bracket(a, b)
    return SpaceTag.lu(text)


# (p, q, n) -> N, I, E, L
OPERATOR_CELLS = [
    (("1", "inf", 3), ["c0", "linf", "linf", "linf"]),
    (("1", "inf", 1), ["c0", "linf", "linf", "linf"]),
    (("1", "1", 2), ["1", "1", "linf", "linf"]),
    (("1", "2", 3), ["2", "2", "linf", "linf"]),
    (("1", "3", 1), ["3", "3", "linf", "linf"]),
    (("3/2", "1", 4), ["1", "1", "3/2", "linf"]),
    (("3/2", "1", 1), ["1", "1", "3/2", "3"]),
    (("3/2", "3/2", 2), ["1", "1", "[3/2,3]", "linf"]),
    (("3/2", "3", 2), ["1", "1", "[3,3]", "linf"]),
    (("3/2", "4", 2), ["12/11", "12/11", "4", "linf"]),
    (("3/2", "inf", 1), ["3", "3", "linf", "linf"]),
    (("3/2", "inf", 3), ["1", "1", "linf", "linf"]),
    (("5/4", "2", 1), ["10/7", "10/7", "[2,5]", "linf"]),
    (("2", "2", 2), ["1", "1", "2", "linf"]),
    (("2", "1", 1), ["1", "1", "1", "2"]),
    (("2", "1", 2), ["1", "1", "1", "linf"]),
    (("3", "2", 2), ["1", "1", "2", "linf"]),
    (("3", "1", 2), ["1", "1", "1", "3"]),
    (("3", "inf", 1), ["3/2", "3/2", "linf", "linf"]),
    (("3", "3/2", 2), ["1", "1", "3/2", "linf"]),
    (("3", "3/2", 1), ["1", "1", "3/2", "3"]),
    (("4", "1", 2), ["1", "1", "1", "2"]),
    (("6", "1", 2), ["1", "1", "1", "3/2"]),
    (("2", "inf", 1), ["2", "2", "linf", "linf"]),
    (("inf", "1", 3), ["1", "1", "1", "1"]),
    (("inf", "2", 2), ["1", "1", "2", "2"]),
    (("inf", "inf", 2), ["1", "1", "linf", "linf"]),
]

# (p, n) -> N, I, E, L
FORM_CELLS = [
    (("1", 5), ["c0", "linf", "linf", "linf"]),
    (("3/2", 2), ["3/2", "3/2", "3/2", "linf"]),
    (("3/2", 3), ["1", "1", "3/2", "linf"]),
    (("5/4", 3), ["5/3", "5/3", "5/2", "linf"]),
    (("4", 3), ["1", "1", "1", "4"]),
    (("3", 3), ["1", "1", "1", "linf"]),
    (("2", 4), ["1", "1", "1", "linf"]),
    (("inf", 4), ["1", "1", "1", "1"]),
    (("3", 1), ["3/2", "3/2", "3/2", "3/2"]),
]


def spaces(c: Classification):
    return [c.spaces[i] for i in IDEALS]


@pytest.mark.parametrize("cell, expected", OPERATOR_CELLS)
def test_classify_operators_golden(cell, expected):
    c = classify_operators(*cell)
    assert spaces(c) == [tag(e) for e in expected]
    assert c.is_nested()


@pytest.mark.parametrize("cell, expected", FORM_CELLS)
def test_classify_forms_golden(cell, expected):
    c = classify_forms(*cell)
    assert spaces(c) == [tag(e) for e in expected]
    assert c.is_nested()


def test_bracket_is_preserved():
    c = classify_operators("3/2", "3/2", 2)
    assert c.spaces[Ideal.E].is_bracket
    assert c.markers == [Marker.EQUAL, Marker.STRICT, Marker.STRICT]
    assert c.regime == "1<p<2, 1<q<=p'"


def test_c0_is_distinct_from_linf():
    c = classify_operators("1", "inf", 2)
    assert c.spaces[Ideal.N] != c.spaces[Ideal.I]
    assert c.markers[0] is Marker.STRICT


def test_lu_of_infinity_is_linf():
    assert SpaceTag.lu("inf") == SpaceTag.linf()


@pytest.mark.parametrize("p, q, table1, table2", [
    ("1", "inf", "N ≠ I", "I = E = L"),
    ("3", "1", "N = I", "I = E ≠ L"),
    ("3/2", "3/2", "N = I", "I ≠ E ≠ L"),
    ("inf", "1", "N = I", "I = E = L"),
    ("1", "2", "N = I", "I ≠ E = L"),
    ("2", "inf", "N = I", "I ≠ E = L"),
    ("inf", "3", "N = I", "I ≠ E = L"),
    ("2", "1", "N = I", "I = E ≠ L"),
    ("5/4", "1", "N = I", "I ≠ E ≠ L"),
])
def test_coincidence_tables(p, q, table1, table2):
    rows = coincidence_tables(p, q)
    assert (rows.table1, rows.table2) == (table1, table2)


GRID = ["1", "5/4", "3/2", "2", "3", "inf"]


@pytest.mark.parametrize("p", GRID)
@pytest.mark.parametrize("q", GRID)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_tables_follow_from_classification(p, q, n):
    c = classify_operators(p, q, n)
    assert c.is_nested()
    assert tables_from_classification(c) == coincidence_tables(p, q)


exponents = st.one_of(
    st.just(INF),
    st.fractions(min_value=1, max_value=12, max_denominator=16).map(Exponent),
)


@settings(max_examples=200)
@given(exponents, exponents, st.integers(min_value=1, max_value=6))
def test_operator_classifications_nest_and_match_tables(p, q, n):
    c = classify_operators(p, q, n)
    assert c.is_nested()
    assert tables_from_classification(c) == coincidence_tables(p, q)


@given(exponents, st.integers(min_value=1, max_value=6))
def test_form_classifications_nest(p, n):
    assert classify_forms(p, n).is_nested()


def test_render_chain_bracket():
    chain = render_chain(classify_operators("3/2", "3/2", 2))
    assert "ℓ_{3/2} ⊆ E ⊆ ℓ_{3+ε}" in chain
    assert chain == "ℓ1 = N = I ⊊ ℓ_{3/2} ⊆ E ⊆ ℓ_{3+ε} ⊊ ℓ∞ = L"


def test_render_chain_endpoint():
    assert render_chain(classify_operators("1", "inf", 3)) == "c0 = N ⊊ ℓ∞ = I = E = L"


def test_classification_json_round_trip():
    c = classify_operators("3/2", "3/2", 2)
    data = c.to_json()
    assert data["markers"] == ["=", "⊊", "⊊"]
    assert data["ideals"][2]["space"] == {"kind": "bracket", "exponent": "3/2", "upper": "3"}
    assert Classification.from_json(data) == c


@pytest.mark.parametrize("s, text, expected", [
    ("1", "1", False),
    ("0.6", "2", True),
    ("0", "c0", False),
    ("0", "linf", True),
    ("1/10", "c0", True),
    ("1", "[3/2,3]", True),
    ("1/5", "[3/2,3]", False),
    ("1/3", "[3/2,3]", None),
    ("1/2", "[3/2,3]", None),
])
def test_power_membership(s, text, expected):
    assert power_membership(s, tag(text)) is expected


def test_power_membership_rejects_negative_decay():
    with pytest.raises(DomainError):
        power_membership("-1", SpaceTag.linf())


def test_growth_unbounded_harmonic_like():
    report = growth_scan("inf", "1", 1, "L", "0.9")
    assert report.slope == pytest.approx(0.1, abs=0.01)
    assert not report.bounded
    assert report.membership is False
    assert report.agrees


def test_growth_bounded_above_critical():
    report = growth_scan("inf", "1", 1, "L", "1.1")
    assert report.bounded
    assert report.agrees


def test_growth_nuclear_t1():
    report = growth_scan("2", "2", 2, "N", 2)
    assert str(report.exponent) == "1"
    assert report.bounded
    assert report.membership is True


def test_growth_linf_space_is_always_bounded():
    report = growth_scan("2", "2", 2, "L", 0)
    assert report.slope == 0.0
    assert report.agrees


def test_growth_rejects_extendible():
    with pytest.raises(DomainError):
        growth_scan("2", "2", 2, "E", 1)


def test_growth_grid_needs_three_points():
    with pytest.raises(DomainError):
        growth_scan("2", "2", 2, "L", 1, grid=[16, 32])


@pytest.mark.parametrize("p, q, n, ideal, s", [
    ("3", "1", 2, "L", Fraction(1, 4)),
    ("3", "1", 2, "L", Fraction(1, 2)),
    ("1", "3", 2, "N", Fraction(1, 4)),
    ("1", "3", 2, "I", Fraction(2, 5)),
    ("3/2", "4", 2, "N", Fraction(4, 5)),
    ("3/2", "4", 2, "N", 1),
])
def test_growth_agrees_with_membership(p, q, n, ideal, s):
    assert growth_scan(p, q, n, ideal, s).agrees


def test_growth_report_json():
    data = growth_scan("inf", "1", 1, "L", "0.9", grid=[16, 32, 64, 128]).to_json()
    assert data["type"] == "growth"
    assert data["grid"] == [16, 32, 64, 128]
    assert data["s"] == "9/10"
