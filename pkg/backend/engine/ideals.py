"""
Nuclear, integral and extendible norms of diagonal operators

Exact values come from closed l_u formulas. Upper bounds are factorization
certificates whose legs are diagonal operators with exact Holder norms;
lower bounds are duality pairings against an explicit witness.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

from config.settings import (
    CERTIFICATE_CONFIG, DEFAULT_SEED, DIAGNOSTIC_CONFIG, PHI_CERTIFICATE_CONFIG,
)
from backend.engine.errors import DimensionError, DomainError
from backend.engine.exponents import (
    INF, ONE, TWO, Exponent, ExponentLike, conjugate, nuclear_t, parse_rational,
)
from backend.engine.matrices import walsh, xi_matrix, xi_norm_bound
from backend.engine.multilinear import DiagonalOperator, bh_form
from backend.engine.norms import (
    CertificateKind, NormCertificate, alternating_ascent_norm, certificate_bounds,
    diagonal_norm_exact, linear_norm_to_linf, lp_norm, partial_lu_norm,
    vector_to_json, vertex_bruteforce_norm,
)

logger = logging.getLogger(__name__)


def _power(mag: np.ndarray, e: float) -> np.ndarray:
    """|a|^e with 0 sent to 0 for every e >= 0"""
    out = np.zeros(mag.shape, dtype=float)
    nz = mag > 0
    out[nz] = mag[nz] ** e
    return out


def _phase(alpha: np.ndarray) -> np.ndarray:
    mag = np.abs(alpha)
    out = np.zeros(alpha.shape, dtype=np.result_type(alpha.dtype, float))
    nz = mag > 0
    out[nz] = alpha[nz] / mag[nz]
    return out


@dataclass(frozen=True, eq=False)
class FactorizationLeg:
    """
    One factor of a factorization. Diagonal legs carry their sequence and
    have norm ||D_seq : l_source -> l_target||; other legs carry a stated fact.
    """
    name: str
    norm: float
    multiplicity: int = 1
    sequence: Optional[np.ndarray] = None
    source: Optional[Exponent] = None
    target: Optional[Exponent] = None
    fact: str = ""

    def recompute(self) -> float:
        if self.sequence is None:
            return self.norm
        op = DiagonalOperator(self.sequence, 1, self.source, self.target)
        return diagonal_norm_exact(op).value

    def to_json(self) -> dict:
        data = {"name": self.name, "norm": self.norm, "multiplicity": self.multiplicity}
        if self.sequence is not None:
            data.update(sequence=vector_to_json(self.sequence),
                        source=str(self.source), target=str(self.target))
        if self.fact:
            data["fact"] = self.fact
        return data


@dataclass(frozen=True)
class FactorizationCertificate:
    legs: List[FactorizationLeg]
    middle_norm: float
    middle_fact: str
    bound: float
    method: str
    target: Optional[float] = None

    def product(self, recompute: bool = False) -> float:
        value = self.middle_norm
        for leg in self.legs:
            value *= (leg.recompute() if recompute else leg.norm) ** leg.multiplicity
        return value

    def verify(self) -> bool:
        """Recompute every diagonal leg and compare the product with the bound"""
        rtol = CERTIFICATE_CONFIG["factorization_rtol"]
        product = self.product(recompute=True)
        scale = max(abs(product), abs(self.bound))
        ok = scale == 0 or abs(product - self.bound) <= rtol * scale
        if ok and self.target is not None:
            scale = max(abs(self.target), abs(self.bound))
            ok = scale == 0 or abs(self.target - self.bound) <= rtol * scale
        return ok

    def as_upper(self) -> NormCertificate:
        return NormCertificate(self.bound, CertificateKind.UPPER, self.method,
                               witness={"factorization": self.to_json()})

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "legs": [leg.to_json() for leg in self.legs],
            "middle_norm": self.middle_norm,
            "middle_fact": self.middle_fact,
            "bound": self.bound,
            "target": self.target,
        }


@dataclass(frozen=True)
class IdealNorms:
    t: Exponent
    nuclear: NormCertificate
    integral: NormCertificate
    nuclear_requires_c0: bool = False

    @property
    def note(self) -> str:
        return "nuclear iff alpha in c0" if self.nuclear_requires_c0 else ""

    def to_json(self) -> dict:
        return {
            "t": str(self.t),
            "nuclear": self.nuclear.to_json(),
            "integral": self.integral.to_json(),
            "note": self.note,
        }


def _exact(value: float, method: str, **witness) -> NormCertificate:
    return NormCertificate(value, CertificateKind.EXACT, method, witness=witness)


def nuclear_integral_exact(op: DiagonalOperator) -> IdealNorms:
    """
    ||T_alpha||_N = ||T_alpha||_I = ||alpha||_t with t = nuclear_t(p, q, n).
    p = 1 gives t = q; at (1, inf) both equal ||alpha||_inf but nuclearity
    also needs alpha in c0, which every finite section satisfies.
    """
    t = nuclear_t(op.p, op.q, op.n)
    value = lp_norm(op.alpha, t)
    endpoint = op.p == ONE and op.q.is_infinite
    method = "nuclear-integral" if op.p > ONE else "l1-source"
    return IdealNorms(
        t=t,
        nuclear=_exact(value, method, exponent=str(t)),
        integral=_exact(value, method, exponent=str(t)),
        nuclear_requires_c0=endpoint,
    )


def form_nuclear_integral_exact(alpha, slot_exponents: Sequence[ExponentLike]) -> IdealNorms:
    """Diagonal forms on l_{p_1} x ... x l_{p_m}: ||alpha||_t with 1/t = min(sum 1/p_i', 1)"""
    exps = [Exponent.parse(p) for p in slot_exponents]
    if not exps:
        raise DimensionError("A form needs at least one slot")
    s = sum((conjugate(p).reciprocal for p in exps), Fraction(0))
    t = ONE if s >= 1 else Exponent.from_reciprocal(s)
    value = lp_norm(np.asarray(alpha), t)
    return IdealNorms(
        t=t,
        nuclear=_exact(value, "form-nuclear-integral", exponent=str(t)),
        integral=_exact(value, "form-nuclear-integral", exponent=str(t)),
        nuclear_requires_c0=s == 0,
    )


@dataclass(frozen=True)
class IdentificationReport:
    passed: bool
    operator_value: float
    form_value: float
    residual: float
    ideals: tuple = ("N", "I")

    def to_json(self) -> dict:
        return {"type": "identification", "passed": self.passed, "ideals": list(self.ideals),
                "operator": self.operator_value, "form": self.form_value,
                "residual": self.residual}


def identification_check(op: DiagonalOperator) -> IdentificationReport:
    """
    T_alpha : l_p^n -> l_q against its (n+1)-form on l_p x ... x l_p x l_{q'}.
    Only the nuclear and integral norms are compared; extendibility is not
    preserved by this identification.
    """
    operator = nuclear_integral_exact(op)
    form = form_nuclear_integral_exact(op.alpha, [op.p] * op.n + [conjugate(op.q)])
    a, b = operator.integral.value, form.integral.value
    scale = max(abs(a), abs(b))
    residual = 0.0 if scale == 0 else abs(a - b) / scale
    return IdentificationReport(
        passed=residual <= CERTIFICATE_CONFIG["factorization_rtol"] and operator.t == form.t,
        operator_value=a, form_value=b, residual=residual,
    )


def _middle_psi_norm(N: int, n: int) -> float:
    """||Psi||_I for Psi = T_(1,1,...) : l_1 x ... x l_1 -> l_inf"""
    psi = DiagonalOperator(np.ones(max(N, 1)), n, ONE, INF)
    return nuclear_integral_exact(psi).integral.value


def nuclear_upper_factorization(op: DiagonalOperator) -> FactorizationCertificate:
    """
    T_alpha = D_nu o Psi o (D_eta, ..., D_eta) with eta = |alpha|^{t/p'} and
    nu = phase(alpha) |alpha|^{t/q}; the bound ||nu||_q ||eta||_{p'}^n equals
    ||alpha||_t.
    """
    if op.p == ONE:
        raise DomainError("The factorization needs p > 1")
    t = nuclear_t(op.p, op.q, op.n)
    if t == ONE:
        raise DomainError("t = 1: the exact value is ||alpha||_1, no factorization needed")

    alpha = op.alpha
    mag = np.abs(alpha)
    dual = conjugate(op.p)
    eta = _power(mag, float(t.value * dual.reciprocal))
    nu = _phase(alpha) * _power(mag, float(t.value * op.q.reciprocal))

    legs = [
        FactorizationLeg("D_nu", diagonal_norm_exact(DiagonalOperator(nu, 1, INF, op.q)).value,
                         1, nu, INF, op.q),
        FactorizationLeg("D_eta", diagonal_norm_exact(DiagonalOperator(eta, 1, op.p, ONE)).value,
                         op.n, eta, op.p, ONE),
    ]
    middle = _middle_psi_norm(op.dimension, op.n)
    cert = FactorizationCertificate(
        legs=legs,
        middle_norm=middle,
        middle_fact="Psi = T_(1,1,...) : l_1 x ... x l_1 -> l_inf is integral with norm 1",
        bound=0.0,
        method="nuclear-factorization",
        target=lp_norm(alpha, t),
    )
    bound = cert.product()
    logger.debug("Nuclear factorization t=%s: bound %.17g", t, bound)
    return FactorizationCertificate(cert.legs, cert.middle_norm, cert.middle_fact, bound,
                                    cert.method, cert.target)


def integral_lower_duality(op: DiagonalOperator) -> NormCertificate:
    """
    Lower bound |sum alpha_k beta_k| / ||T_beta : l_{p'}^n -> l_{q'}|| with the
    Holder-equality witness beta = conj(phase(alpha)) |alpha|^{t-1}. The
    normalizing norm is ||beta||_{t'}, so the bound equals ||alpha||_t.
    """
    t = nuclear_t(op.p, op.q, op.n)
    alpha = op.alpha
    mag = np.abs(alpha)
    if mag.size == 0 or mag.max() == 0:
        return NormCertificate(0.0, CertificateKind.LOWER, "duality",
                               witness={"beta": vector_to_json(np.zeros(mag.shape)), "t": str(t)})

    if t.is_infinite:
        beta = np.zeros(alpha.shape, dtype=_phase(alpha).dtype)
        k = int(np.argmax(mag))
        beta[k] = np.conj(_phase(alpha))[k]
    else:
        # scaled by the max entry so large t does not overflow
        beta = np.conj(_phase(alpha)) * _power(mag / mag.max(), float(t.value) - 1)

    dual_op = DiagonalOperator(beta, op.n, conjugate(op.p), conjugate(op.q))
    beta_norm = diagonal_norm_exact(dual_op).value
    beta = beta / beta_norm
    value = float(abs(np.dot(alpha, beta)))
    return NormCertificate(
        value=value,
        kind=CertificateKind.LOWER,
        method="duality",
        witness={"beta": vector_to_json(beta), "t": str(t), "dual_exponent": str(conjugate(t))},
    )


def extendible_upper_linfty(op: DiagonalOperator) -> NormCertificate:
    """
    ||T_alpha||_E <= ||alpha||_q through T_alpha = D_alpha o T_(1,...,1) with
    T_(1,...,1) : l_p^n -> l_inf of norm one; l_inf has the metric extension
    property, so the first factor extends with the same norm.
    """
    ones = np.ones(max(op.dimension, 1))
    middle = diagonal_norm_exact(DiagonalOperator(ones, op.n, op.p, INF)).value
    leg = FactorizationLeg("D_alpha", diagonal_norm_exact(
        DiagonalOperator(op.alpha, 1, INF, op.q)).value, 1, op.alpha, INF, op.q)
    cert = FactorizationCertificate(
        legs=[leg],
        middle_norm=middle,
        middle_fact="T_(1,...,1) : l_p x ... x l_p -> l_inf has norm one",
        bound=leg.norm * middle,
        method="extendible-linf",
        target=lp_norm(op.alpha, op.q),
    )
    return cert.as_upper()


def _sqrt_split(alpha: np.ndarray):
    if np.iscomplexobj(alpha):
        root = np.sqrt(alpha)
        return root, root
    root = np.sqrt(np.abs(alpha))
    return np.sign(alpha) * root, root


def extendible_upper_sqrt(alpha, p: ExponentLike, n: int) -> FactorizationCertificate:
    """
    phi_alpha(x_1, ..., x_n) = Phi(D_sigma x_1, D_sigma' x_2, x_3, ..., x_n) with
    sigma sigma' = alpha and |sigma| = |sigma'| = |alpha|^{1/2}; the bound is
    ||sigma||_{p'}^2 = ||alpha||_{p'/2}.
    """
    p = Exponent.parse(p)
    if not ONE < p < TWO:
        raise DomainError(f"The square-root factorization needs 1 < p < 2, got p = {p}")
    if n < 2:
        raise DomainError(f"The square-root factorization needs n >= 2, got n = {n}")
    alpha = np.asarray(alpha)
    first, second = _sqrt_split(alpha)
    half = Exponent(conjugate(p).value / 2)

    legs = [
        FactorizationLeg(name, diagonal_norm_exact(DiagonalOperator(seq, 1, p, ONE)).value,
                         1, seq, p, ONE)
        for name, seq in (("D_sigma", first), ("D_sigma'", second))
    ]
    cert = FactorizationCertificate(
        legs=legs,
        middle_norm=1.0,
        middle_fact="Phi on l_1 x l_1 x l_p x ... x l_p is extendible with norm at most 1",
        bound=0.0,
        method="extendible-sqrt",
        target=partial_lu_norm(alpha, half, alpha.shape[0]),
    )
    return FactorizationCertificate(cert.legs, cert.middle_norm, cert.middle_fact,
                                    cert.product(), cert.method, cert.target)


def bh_norm_upper(N: int, n: int, field: str = "real") -> NormCertificate:
    """
    ||L_N|| <= N^2 on l_inf^N in every slot:
    |L_N(x)| <= sum_l |(A^T x_1)_l| |(A x_2)_l| <= ||A^T x_1||_2 ||A x_2||_2
    and ||A y||_2 = sqrt(N) ||y||_2 <= N ||y||_inf.
    """
    if n < 3:
        raise DimensionError(f"L_N is defined for n >= 3, got {n}")
    A = walsh(N, field)
    spectral = float(np.linalg.norm(A.entries, 2))
    return NormCertificate(
        value=float(N * N),
        kind=CertificateKind.UPPER,
        method="cauchy-schwarz",
        witness={"N": N, "n": n, "field": field, "spectral_norm": spectral,
                 "l2_radius_of_linf_ball": float(np.sqrt(N))},
    )


def _bh_leg(N: int, n: int, field: str, seed: int) -> dict:
    A = walsh(N, field)
    L = bh_form(A, n)
    if field == "real" and n * N <= PHI_CERTIFICATE_CONFIG["bruteforce_max_nN"]:
        exact = vertex_bruteforce_norm(L)
        return {"value": exact.value, "certificates": [exact]}
    lower = alternating_ascent_norm(L, [INF] * n, seed=seed)
    upper = bh_norm_upper(N, n, field)
    sandwich = certificate_bounds([lower, upper])
    if not sandwich.consistent:
        logger.warning("Ascent for ||L_%d|| exceeds the analytic bound", N)
    return {"value": upper.value, "certificates": [lower, upper], "sandwich": sandwich}


def phi_extendibility_certificate(N: int, n: int, p_rest: Optional[Sequence[ExponentLike]] = None,
                                  field: str = "real",
                                  seed: int = DEFAULT_SEED) -> NormCertificate:
    """
    ||Phi_N||_E <= (1/N^2) ||L_N|| ||xi_N : l_1 -> l_inf||^2 prod ||id : l_{p_i}^N -> l_inf^N||,
    from Phi_N(x_1, ..., x_n) = N^{-2} L_N(xi_N x_1, xi_N x_2, x_3, ..., x_n).
    """
    if n < 3:
        raise DomainError(f"The Phi_N certificate needs n >= 3, got {n}")
    if p_rest is None:
        p_rest = [PHI_CERTIFICATE_CONFIG["default_slot_exponent"]] * (n - 2)
    p_rest = [Exponent.parse(p) for p in p_rest]
    if len(p_rest) != n - 2:
        raise DimensionError(f"Expected {n - 2} slot exponents, got {len(p_rest)}")

    A = walsh(N, field)
    bh = _bh_leg(N, n, field, seed)
    xi_numeric = linear_norm_to_linf(xi_matrix(A), ONE)
    xi_bound = xi_norm_bound(ONE, N)

    legs = [
        FactorizationLeg("L_N", bh["value"], 1, fact=f"||L_{N}|| on l_inf^{N}"),
        FactorizationLeg("xi_N", xi_bound, 2, fact="||xi_N : l_1 -> l_inf|| = max |a_kr| = 1"),
    ]
    for i, p in enumerate(p_rest):
        inclusion = linear_norm_to_linf(np.eye(N), p)
        legs.append(FactorizationLeg(f"id_{i + 3}", inclusion.value, 1,
                                     fact=f"||id : l_{p}^{N} -> l_inf^{N}||"))

    cert = FactorizationCertificate(
        legs=legs,
        middle_norm=1.0 / (N * N),
        middle_fact="Phi_N = N^-2 L_N(xi_N x_1, xi_N x_2, x_3, ...); l_inf has the extension property",
        bound=0.0,
        method="phi-factorization",
    )
    bound = bh["value"] / (N * N)
    for leg in legs[1:]:
        bound *= leg.norm ** leg.multiplicity

    witness = {
        "factorization": FactorizationCertificate(
            cert.legs, cert.middle_norm, cert.middle_fact, bound, cert.method).to_json(),
        "bh_certificates": [c.to_json() for c in bh["certificates"]],
        "xi_row_norm": xi_numeric.value,
        "N": N, "n": n, "field": field,
        "slot_exponents": [str(p) for p in p_rest],
    }
    if "sandwich" in bh:
        witness["bh_sandwich"] = bh["sandwich"].to_json()
    logger.info("Phi_%d extendibility bound for n=%d: %.17g", N, n, bound)
    return NormCertificate(bound, CertificateKind.UPPER, "phi-factorization", witness=witness,
                           seed=seed if "sandwich" in bh else None)


def extendible_exact_endpoint(op: DiagonalOperator) -> NormCertificate:
    """
    At p = 1 and p = inf the extendible norm of T_alpha equals its usual
    norm: ||alpha||_inf for p = 1, ||alpha||_q for p = inf.
    """
    if ONE < op.p and not op.p.is_infinite:
        raise DomainError(f"Exact extendible norms are known only for p in {{1, inf}}, got p = {op.p}")
    usual = diagonal_norm_exact(op)
    return NormCertificate(usual.value, CertificateKind.EXACT, "extendible-endpoint",
                           witness=dict(usual.witness, source=str(op.p)))


@dataclass(frozen=True)
class SummabilityStatistic:
    exponent: Exponent
    prefixes: List[int]
    values: List[float]
    slope: Optional[float]

    def to_json(self) -> dict:
        return {"u": str(self.exponent), "prefixes": self.prefixes, "values": self.values,
                "slope": self.slope}


@dataclass(frozen=True)
class DiagnosticReport:
    p: Exponent
    q: Exponent
    n: int
    region: str
    statistics: List[SummabilityStatistic] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "type": "extendible-diagnostic",
            "p": str(self.p), "q": str(self.q), "n": self.n,
            "region": self.region,
            "statistics": [s.to_json() for s in self.statistics],
            "constant": None,
        }


def _dyadic_prefixes(M: int) -> List[int]:
    prefixes, k = [], 1
    while k < M:
        prefixes.append(k)
        k *= 2
    if M:
        prefixes.append(M)
    return prefixes


def _log_slope(prefixes: List[int], values: List[float]) -> Optional[float]:
    points = [(np.log(m), np.log(v)) for m, v in zip(prefixes, values) if v > 0]
    if len(points) < 2 or len({x for x, _ in points}) < 2:
        return None
    xs, ys = zip(*points)
    return float(stats.linregress(xs, ys).slope)


def _statistic(alpha: np.ndarray, u: Exponent) -> SummabilityStatistic:
    prefixes = _dyadic_prefixes(alpha.shape[0])
    values = [partial_lu_norm(alpha, u, m) for m in prefixes]
    return SummabilityStatistic(u, prefixes, values, _log_slope(prefixes, values))


def extendible_lower_diagnostic(op: DiagonalOperator) -> DiagnosticReport:
    """
    Partial l_u norms of alpha that the summing arguments bound for extendible
    T_alpha. No summing constant is claimed.
    """
    p, q = op.p, op.q
    if p == ONE:
        raise DomainError("The extendibility diagnostic applies for p > 1")
    alpha = np.asarray(op.alpha)
    dual = conjugate(p)

    if p >= TWO:
        region, exps = "p>=2", [q]
    elif q == ONE:
        region, exps = "q=1", [Exponent(dual.value / 2)]
    elif q > dual:
        region, exps = "q>p'", [q]
    else:
        region = "1<q<=p'"
        exps = [Exponent(dual.value + parse_rational(eps)) for eps in DIAGNOSTIC_CONFIG["epsilons"]]

    statistics = [_statistic(alpha, u) for u in exps]
    logger.debug("Extendibility diagnostic p=%s q=%s region %s", p, q, region)
    return DiagnosticReport(p, q, op.n, region, statistics)
