import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backend.engine.errors import DimensionError, DomainError, FieldError, GuardExceeded
from backend.engine.exponents import INF
from backend.engine.matrices import fourier, hadamard
from backend.engine.multilinear import DenseForm, DiagonalOperator, bh_form, phi_form
from backend.engine.norms import (
    CertificateKind, NormCertificate, alternating_ascent_norm, certificate_bounds,
    diagonal_norm_exact, holder_maximizer, linear_norm_to_linf, lp_norm, partial_lu_norm,
    reevaluate_witness, vertex_bruteforce_norm, weak_s_norm,
)

GRID = ["1", "3/2", "2", "3", "inf"]


@pytest.mark.parametrize("alpha, n, p, q, expected", [
    ([1, 0.5], 2, "2", "1", 1.0),
    ([3, 4], 1, "2", "1", 5.0),
    ([0, 0, 0], 3, "3", "1", 0.0),
    ([1, -2, 2], 1, "inf", "2", 3.0),
])
def test_diagonal_norm_exact(alpha, n, p, q, expected):
    cert = diagonal_norm_exact(DiagonalOperator(np.array(alpha, dtype=float), n, p, q))
    assert cert.value == pytest.approx(expected)
    assert cert.kind is CertificateKind.EXACT


def test_vertex_zero_form():
    assert vertex_bruteforce_norm(DenseForm(np.zeros((2, 2, 2)))).value == 0


@pytest.mark.parametrize("N, n", [(2, 3), (2, 4), (4, 3)])
def test_vertex_bh_norm(N, n):
    cert = vertex_bruteforce_norm(bh_form(hadamard(N), n))
    assert cert.value == N * N
    assert reevaluate_witness(bh_form(hadamard(N), n), cert, [INF] * n) == N * N


@pytest.mark.parametrize("N, n", [(3, 2), (4, 3), (2, 5)])
def test_vertex_phi_form(N, n):
    assert vertex_bruteforce_norm(phi_form(N, n).to_dense()).value == N


def test_vertex_operator_target():
    op = DiagonalOperator(np.array([1.0, -2.0, 2.0]), 2, "inf", "2")
    cert = vertex_bruteforce_norm(op.to_dense("operator"), q_target="2")
    assert cert.value == pytest.approx(3.0, rel=1e-15)


def test_vertex_guards():
    with pytest.raises(GuardExceeded):
        vertex_bruteforce_norm(bh_form(hadamard(8), 4))
    with pytest.raises(FieldError):
        vertex_bruteforce_norm(bh_form(fourier(2), 3))


def test_ascent_matches_holder():
    op = DiagonalOperator(np.array([3.0, 4.0]), 1, "2", "1")
    cert = alternating_ascent_norm(op.to_dense("operator"), ["2"], q_target="1")
    assert cert.value >= 5 - 1e-8
    assert cert.kind is CertificateKind.LOWER


def test_ascent_reaches_bh_norm():
    L = bh_form(hadamard(2), 3)
    cert = alternating_ascent_norm(L, [INF] * 3)
    assert cert.value == pytest.approx(4.0)
    assert reevaluate_witness(L, cert, [INF] * 3) == pytest.approx(cert.value, rel=1e-9)


def test_ascent_zero_form():
    assert alternating_ascent_norm(DenseForm(np.zeros((3, 3))), ["2", "2"]).value == 0


def test_ascent_complex_bh_lower_bound():
    L = bh_form(fourier(3), 3)
    cert = alternating_ascent_norm(L, [INF] * 3, seed=11)
    assert cert.seed == 11
    assert 0 < cert.value <= 9 * (1 + 1e-9)


def test_ascent_is_deterministic_for_a_seed(rng):
    T = DenseForm(rng.standard_normal((3, 3, 3)))
    first = alternating_ascent_norm(T, ["3/2", "2", "3"], seed=5)
    second = alternating_ascent_norm(T, ["3/2", "2", "3"], seed=5)
    assert first.to_json() == second.to_json()


@pytest.mark.parametrize("instance", range(12))
def test_holder_oracle(instance):
    rng = np.random.default_rng(1000 + instance)
    n, N = int(rng.integers(1, 4)), int(rng.integers(2, 6))
    p, q = GRID[int(rng.integers(5))], GRID[int(rng.integers(5))]
    op = DiagonalOperator(rng.standard_normal(N), n, p, q)
    exact = diagonal_norm_exact(op).value
    dense = op.to_dense("operator")
    lower = alternating_ascent_norm(dense, [p] * n, q_target=q).value
    assert exact * (1 - 1e-6) <= lower <= exact * (1 + 1e-9)
    if p == "inf":
        assert vertex_bruteforce_norm(dense, q_target=q).value == pytest.approx(exact, rel=1e-12)


@settings(deadline=None, max_examples=25)
@given(c=st.floats(min_value=-50, max_value=50).filter(lambda c: abs(c) > 1e-3),
       p=st.sampled_from(GRID), q=st.sampled_from(GRID), n=st.integers(min_value=1, max_value=4))
def test_homogeneity(c, p, q, n):
    alpha = np.array([1.0, -0.25, 0.5, 2.0])
    base = diagonal_norm_exact(DiagonalOperator(alpha, n, p, q)).value
    scaled = diagonal_norm_exact(DiagonalOperator(c * alpha, n, p, q)).value
    assert scaled == pytest.approx(abs(c) * base, rel=1e-13)


def test_holder_maximizer_attains_dual_norm(rng):
    gamma = rng.standard_normal(5)
    for p in GRID:
        x = holder_maximizer(gamma, p)
        assert lp_norm(x, p) == pytest.approx(1.0)
        dual = {"1": "inf", "3/2": "3", "2": "2", "3": "3/2", "inf": "1"}[p]
        assert np.dot(gamma, x) == pytest.approx(lp_norm(gamma, dual))


def test_holder_maximizer_ties_go_to_lowest_index():
    np.testing.assert_array_equal(holder_maximizer(np.array([1.0, -2.0, 2.0]), "1"), [0, -1, 0])


def test_linear_norm_to_linf():
    cert = linear_norm_to_linf(hadamard(4).entries, "2")
    assert cert.value == pytest.approx(2.0)
    assert linear_norm_to_linf(hadamard(8).entries, "1").value == 1.0


def test_weak_s_canonical():
    basis = np.eye(4)
    assert weak_s_norm(basis, s="2", p="2").value == 1.0
    assert weak_s_norm(basis, s="1", p="2").value == pytest.approx(2.0)
    assert weak_s_norm(basis, s="inf", p="3").method == "identity-inclusion"


def test_weak_s_single_vector():
    cert = weak_s_norm([np.array([3.0, 4.0])], s="1", p="2")
    assert cert.value == 5.0
    assert cert.kind is CertificateKind.EXACT


def test_weak_s_general_vectors_below_analytic_bound(rng):
    vectors = rng.standard_normal((3, 4))
    cert = weak_s_norm(vectors, s="2", p="3/2")
    assert cert.kind is CertificateKind.LOWER
    assert 0 < cert.value <= cert.witness["analytic_upper"] * (1 + 1e-9)


@pytest.mark.parametrize("alpha, u, M, expected", [
    ([1, 1, 1], "1", 3, 3.0),
    ([3, 4], "2", 2, 5.0),
    ([1 / k for k in range(1, 11)], "1", 10, 2.9289682539682538),
    ([5, 1], "inf", 1, 5.0),
    ([5, 1], "2", 0, 0.0),
])
def test_partial_lu_norm(alpha, u, M, expected):
    assert partial_lu_norm(np.array(alpha, dtype=float), u, M) == pytest.approx(expected)


def test_partial_lu_norm_monotone(rng):
    alpha = rng.uniform(0, 1, 20)
    values = [partial_lu_norm(alpha, "3/2", M) for M in range(21)]
    assert values == sorted(values)
    by_u = [partial_lu_norm(alpha, u, 20) for u in ["inf", "3", "2", "3/2", "1"]]
    assert by_u == sorted(by_u)


def test_partial_lu_norm_range():
    with pytest.raises(DimensionError):
        partial_lu_norm(np.ones(3), "2", 4)


def test_witness_outside_unit_ball_is_rejected():
    L = bh_form(hadamard(2), 3)
    bad = NormCertificate(8.0, CertificateKind.LOWER, "ascent",
                          witness={"vectors": [[2.0, 2.0], [1.0, 1.0], [1.0, 1.0]]})
    with pytest.raises(DomainError):
        reevaluate_witness(L, bad, [INF] * 3)


def test_sandwich():
    lower = NormCertificate(3.0, CertificateKind.LOWER, "ascent")
    upper = NormCertificate(4.0, CertificateKind.UPPER, "analytic")
    exact = NormCertificate(3.5, CertificateKind.EXACT, "closed-form")
    sandwich = certificate_bounds([lower, upper, exact])
    assert (sandwich.lower, sandwich.upper, sandwich.consistent) == (3.5, 3.5, True)
    assert not certificate_bounds([NormCertificate(5.0, CertificateKind.LOWER, "a"), upper]).consistent


def test_certificate_json_round_trip():
    cert = alternating_ascent_norm(bh_form(hadamard(2), 3), [INF] * 3)
    assert NormCertificate.from_json(cert.to_json()) == cert


@pytest.mark.parametrize("u, expected", [("1", 2e200), ("2", 2 ** 0.5 * 1e200), ("3", 2 ** (1 / 3) * 1e200),
                                         ("inf", 1e200)])
def test_lp_norm_of_huge_entries_stays_finite(u, expected):
    assert lp_norm(np.array([1e200, -1e200]), u) == pytest.approx(expected, rel=1e-14)


def test_exact_norm_of_huge_coefficients():
    cert = diagonal_norm_exact(DiagonalOperator(np.array([1e200, 1e200]), 1, "2", "1"))
    assert cert.value == pytest.approx(2 ** 0.5 * 1e200, rel=1e-14)
    assert cert.kind is CertificateKind.EXACT


def test_lp_norm_of_tiny_entries_does_not_underflow():
    assert lp_norm(np.array([3e-200, 4e-200]), "2") == pytest.approx(5e-200, rel=1e-14)
