"""
Norm engines and certificates

Closed forms for diagonal operators, sign-vertex enumeration over l_inf
balls, alternating ascent over l_p balls, weak-s norms and partial l_u
statistics. Every engine returns a NormCertificate whose witness can be
re-checked with reevaluate_witness.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from config.settings import ASCENT_CONFIG, CERTIFICATE_CONFIG, DEFAULT_SEED, VERTEX_CONFIG
from backend.engine.errors import DimensionError, DomainError, FieldError, GuardExceeded
from backend.engine.exponents import ONE, Exponent, ExponentLike, conjugate, holder_r
from backend.engine.multilinear import DenseForm, DiagonalOperator, random_vectors, slot_functional

logger = logging.getLogger(__name__)


class CertificateKind(Enum):
    EXACT = "exact"
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class NormCertificate:
    """A certified norm value with the data needed to re-check it"""
    value: float
    kind: CertificateKind
    method: str
    witness: dict = field(default_factory=dict)
    seed: Optional[int] = None
    iterations: Optional[int] = None
    converged: bool = True

    @property
    def is_lower(self) -> bool:
        return self.kind in (CertificateKind.LOWER, CertificateKind.EXACT)

    @property
    def is_upper(self) -> bool:
        return self.kind in (CertificateKind.UPPER, CertificateKind.EXACT)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "kind": self.kind.value,
            "method": self.method,
            "witness": self.witness,
            "seed": self.seed,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_json(cls, data: dict) -> "NormCertificate":
        return cls(
            value=float(data["value"]),
            kind=CertificateKind(data["kind"]),
            method=data["method"],
            witness=data.get("witness") or {},
            seed=data.get("seed"),
            iterations=data.get("iterations"),
            converged=data.get("converged", True),
        )


def vector_to_json(x) -> list:
    """Real vectors as plain lists, complex ones as [re, im] pairs"""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return [[float(z.real), float(z.imag)] for z in x]
    return [float(v) for v in x]


def vector_from_json(data: list) -> np.ndarray:
    if data and isinstance(data[0], (list, tuple)):
        return np.array([complex(re, im) for re, im in data])
    return np.array(data, dtype=float)


def lp_norm(x, u: ExponentLike) -> float:
    """||x||_u for u in [1, inf]; the empty vector has norm 0"""
    x = np.asarray(x)
    if x.size == 0:
        return 0.0
    u = Exponent.parse(u)
    # rescale by the largest entry so sum |x|^u stays finite
    m = float(np.max(np.abs(x)))
    if m == 0 or not np.isfinite(m):
        return m
    return m * float(np.linalg.norm(x / m, ord=float(u)))


def partial_lu_norm(alpha, u: ExponentLike, M: int) -> float:
    """(sum_{k <= M} |alpha_k|^u)^{1/u}, or the max over the first M entries"""
    alpha = np.asarray(alpha)
    if M < 0 or M > alpha.shape[0]:
        raise DimensionError(f"Prefix length {M} outside [0, {alpha.shape[0]}]")
    return lp_norm(alpha[:M], u)


def diagonal_norm_exact(op: DiagonalOperator) -> NormCertificate:
    """||T_alpha : l_p x ... x l_p -> l_q|| = ||alpha||_inf or ||alpha||_r"""
    holder = holder_r(op.p, op.q, op.n)
    u = holder.space_exponent
    return NormCertificate(
        value=lp_norm(op.alpha, u),
        kind=CertificateKind.EXACT,
        method="holder",
        witness={"holder": holder.to_json(), "exponent": str(u)},
    )


def linear_norm_to_linf(M, p: ExponentLike) -> NormCertificate:
    """||M : l_p^N -> l_inf^K|| = max_k ||row_k||_{p'}"""
    M = np.asarray(M)
    if M.ndim != 2:
        raise DimensionError(f"Expected a matrix, got shape {M.shape}")
    dual = conjugate(p)
    rows = [lp_norm(row, dual) for row in M]
    best = int(np.argmax(rows)) if rows else 0
    return NormCertificate(
        value=max(rows, default=0.0),
        kind=CertificateKind.EXACT,
        method="row-norm",
        witness={"row": best, "dual_exponent": str(dual)},
    )


def _sign_vertices(N: int, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """Rows are the sign vectors 1 - 2*bit_j(i) for i in [start, stop)"""
    stop = 1 << N if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(N, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int64)


def _signs(gamma: np.ndarray) -> np.ndarray:
    s = np.sign(gamma)
    s[s == 0] = 1
    return s


def vertex_bruteforce_norm(T: DenseForm, q_target: Optional[ExponentLike] = None) -> NormCertificate:
    """
    Exact norm of a real form on l_inf^N in every slot by enumerating sign
    vertices. A scalar form enumerates all slots but the last, whose optimum
    is the l_1 norm of the induced functional. With q_target the last slot
    of T is the output coordinate and the l_q norm of the output is maximized.
    """
    if T.field != "real":
        raise FieldError("Vertex enumeration needs a real form; use alternating ascent")
    N = T.dimension
    q = None if q_target is None else Exponent.parse(q_target)
    input_slots = T.arity if q is None else T.arity - 1
    if input_slots < 1:
        raise DimensionError("Operator forms need at least one input slot")
    if input_slots * N > VERTEX_CONFIG["max_nN"]:
        raise GuardExceeded(
            f"Vertex enumeration with nN = {input_slots * N} exceeds {VERTEX_CONFIG['max_nN']}"
        )
    enumerated = input_slots if q is not None else input_slots - 1

    c = T.coefficients
    if enumerated == 0:
        value = float(np.abs(c).sum())
        return NormCertificate(
            value=value, kind=CertificateKind.EXACT, method="vertex",
            witness={"vectors": [vector_to_json(_signs(c))]}, iterations=1,
        )

    count = 1 << N
    per_vertex = N * count ** (enumerated - 1)
    chunk = max(1, VERTEX_CONFIG["chunk_entries"] // per_vertex)
    full = _sign_vertices(N)

    best_value, best_index = -1.0, None
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        # free axes stay in front; enumerated vertex axes are appended
        arr = np.tensordot(c, _sign_vertices(N, start, stop), axes=([0], [1]))
        for _ in range(enumerated - 1):
            arr = np.tensordot(arr, full, axes=([0], [1]))
        if q is None:
            values = np.abs(arr).sum(axis=0)
        else:
            values = np.linalg.norm(arr, ord=float(q), axis=0)
        flat = int(np.argmax(values))
        if values.flat[flat] > best_value:
            best_value = float(values.flat[flat])
            index = np.unravel_index(flat, values.shape)
            best_index = (index[0] + start,) + tuple(index[1:])

    vectors = [full[i] for i in best_index]
    if q is None:
        gamma = slot_functional(T, vectors, T.arity - 1)
        vectors.append(_signs(gamma))
    logger.debug("Vertex enumeration over %d slots at N=%d: %g", enumerated, N, best_value)
    return NormCertificate(
        value=best_value, kind=CertificateKind.EXACT, method="vertex",
        witness={"vectors": [vector_to_json(x) for x in vectors]},
        iterations=count ** enumerated,
    )


def _phase(gamma: np.ndarray) -> np.ndarray:
    mag = np.abs(gamma)
    out = np.ones(gamma.shape, dtype=np.result_type(gamma.dtype, float))
    nz = mag > 0
    out[nz] = gamma[nz] / mag[nz]
    return out


def holder_maximizer(gamma, p: ExponentLike) -> np.ndarray:
    """
    Unit vector x of l_p with sum_k gamma_k x_k = ||gamma||_{p'}. Ties for
    p = 1 go to the lowest index.
    """
    gamma = np.asarray(gamma)
    p = Exponent.parse(p)
    N = gamma.shape[0]
    phase = np.conj(_phase(gamma))
    if p.is_infinite:
        return phase
    mag = np.abs(gamma)
    if p == ONE or mag.max(initial=0.0) == 0:
        x = np.zeros_like(phase)
        k = int(np.argmax(mag)) if N else 0
        x[k] = phase[k]
        return x
    pp = float(conjugate(p))
    scaled = mag / mag.max()
    x = phase * scaled ** (pp - 1)
    return x / lp_norm(x, p)


def _random_unit(rng: np.random.Generator, N: int, p: Exponent, field: str) -> np.ndarray:
    x = random_vectors(rng, N, 1, field)[0]
    return x / lp_norm(x, p)


def _slot_exponents(T: DenseForm, p_slots: Sequence[ExponentLike],
                    q_target: Optional[ExponentLike]) -> list:
    exps = [Exponent.parse(p) for p in p_slots]
    if q_target is not None:
        exps.append(conjugate(q_target))
    if len(exps) != T.arity:
        raise DimensionError(f"Form has {T.arity} slots, got {len(exps)} exponents")
    return exps


def alternating_ascent_norm(T: DenseForm, p_slots: Sequence[ExponentLike],
                            q_target: Optional[ExponentLike] = None,
                            restarts: Optional[int] = None, rtol: Optional[float] = None,
                            max_sweeps: Optional[int] = None,
                            seed: int = DEFAULT_SEED) -> NormCertificate:
    """
    Lower certificate for the norm of T on l_{p_1} x ... x l_{p_n}.

    Each step fixes all slots but one and replaces the free vector by the
    Holder maximizer of the induced functional, so the value never drops.
    With q_target the output coordinate is paired against the unit ball of
    l_{q'}. Seeds are canonical vectors first, then seeded random unit vectors.
    """
    restarts = ASCENT_CONFIG["restarts"] if restarts is None else restarts
    rtol = ASCENT_CONFIG["rtol"] if rtol is None else rtol
    max_sweeps = ASCENT_CONFIG["max_sweeps"] if max_sweeps is None else max_sweeps
    exps = _slot_exponents(T, p_slots, q_target)
    N, arity = T.dimension, T.arity
    rng = np.random.default_rng(seed)
    canonical = min(N, max(1, restarts // 2))
    dtype = complex if T.field == "complex" else float

    best = None
    for restart in range(restarts):
        if restart < canonical:
            xs = [np.eye(N, dtype=dtype)[restart] for _ in range(arity)]
        else:
            xs = [_random_unit(rng, N, e, T.field) for e in exps]

        value, sweeps, converged = 0.0, 0, False
        while sweeps < max_sweeps:
            previous = value
            for slot in range(arity):
                gamma = slot_functional(T, xs, slot)
                xs[slot] = holder_maximizer(gamma, exps[slot])
                value = lp_norm(gamma, conjugate(exps[slot]))
            sweeps += 1
            if value == 0 or value - previous <= rtol * value:
                converged = True
                break

        if best is None or value > best[0]:
            best = (value, [x.copy() for x in xs], sweeps, converged)

    value, xs, sweeps, converged = best
    inputs = xs if q_target is None else xs[:-1]
    if not converged:
        logger.info("Ascent stopped after %d sweeps without meeting rtol %g", sweeps, rtol)
    logger.debug("Ascent best %.17g after %d restarts", value, restarts)
    return NormCertificate(
        value=float(value),
        kind=CertificateKind.LOWER,
        method="ascent",
        witness={"vectors": [vector_to_json(x) for x in inputs]},
        seed=seed,
        iterations=sweeps,
        converged=converged,
    )


def reevaluate_witness(T: DenseForm, certificate: NormCertificate,
                       p_slots: Sequence[ExponentLike],
                       q_target: Optional[ExponentLike] = None) -> float:
    """Recompute the value attained by a certificate's witness vectors"""
    vectors = [vector_from_json(v) for v in certificate.witness.get("vectors", [])]
    input_slots = T.arity if q_target is None else T.arity - 1
    if len(vectors) != input_slots or len(p_slots) != input_slots:
        raise DimensionError(f"Expected {input_slots} witness vectors and exponents")
    tol = CERTIFICATE_CONFIG["witness_rtol"]
    for i, (x, p) in enumerate(zip(vectors, p_slots)):
        if lp_norm(x, p) > 1 + tol:
            raise DomainError(f"Witness vector {i + 1} lies outside the unit ball of l_{p}")
    if q_target is None:
        gamma = slot_functional(T, vectors, T.arity - 1)
        return float(abs(np.dot(gamma, vectors[-1])))
    output = slot_functional(T, vectors, T.arity - 1)
    return lp_norm(output, q_target)


def weak_s_norm(vectors: Sequence, s: ExponentLike, p: ExponentLike,
                seed: int = DEFAULT_SEED) -> NormCertificate:
    """
    w_s of (x^(1), ..., x^(M)) in l_p^N: the norm of gamma -> (gamma(x^(k)))_k
    from l_{p'}^N to l_s^M.
    """
    s, p = Exponent.parse(s), Exponent.parse(p)
    X = np.array([np.asarray(x) for x in vectors])
    if X.ndim != 2:
        raise DimensionError("Vectors must share one length")
    M, N = X.shape
    dual = conjugate(p)

    if M == 1:
        return NormCertificate(lp_norm(X[0], p), CertificateKind.EXACT, "dual-pairing")

    support = [np.flatnonzero(row) for row in X]
    canonical = all(len(sup) == 1 and X[i, sup[0]] == 1 for i, sup in enumerate(support))
    if canonical and len({int(sup[0]) for sup in support}) == M:
        if s >= dual:
            value = 1.0
        else:
            value = float(M ** float(s.reciprocal - dual.reciprocal))
        return NormCertificate(value, CertificateKind.EXACT, "identity-inclusion",
                               witness={"M": M, "dual_exponent": str(dual)})

    K = max(M, N)
    padded = np.zeros((K, K), dtype=X.dtype)
    padded[:M, :N] = X
    form = DenseForm.from_linear_map(padded)
    cert = alternating_ascent_norm(form, [dual], q_target=s, seed=seed)
    upper = lp_norm([lp_norm(x, p) for x in X], s)
    witness = dict(cert.witness, analytic_upper=upper)
    return NormCertificate(cert.value, cert.kind, cert.method, witness,
                           cert.seed, cert.iterations, cert.converged)


@dataclass(frozen=True)
class Sandwich:
    lower: float
    upper: float
    consistent: bool

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "consistent": self.consistent}


def certificate_bounds(certificates: Iterable[NormCertificate]) -> Sandwich:
    """Best lower and upper value over certificates of one object"""
    lower, upper = 0.0, float("inf")
    for cert in certificates:
        if cert.is_lower:
            lower = max(lower, cert.value)
        if cert.is_upper:
            upper = min(upper, cert.value)
    rtol = CERTIFICATE_CONFIG["sandwich_rtol"]
    consistent = lower <= upper * (1 + rtol) + rtol
    if not consistent:
        logger.info("Inconsistent certificates: lower %.17g above upper %.17g", lower, upper)
    return Sandwich(lower, upper, consistent)
