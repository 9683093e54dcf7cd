"""
Dense multilinear forms, diagonal operators, Phi_N and the Bohnenblust-Hille form L_N
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from config.settings import COMPOSITION_CONFIG, DEFAULT_SEED, DENSE_CONFIG
from backend.engine.errors import DimensionError, FieldError, GuardExceeded
from backend.engine.exponents import INF, ONE, Exponent, ExponentLike
from backend.engine.matrices import WalshMatrix, xi_matrix

logger = logging.getLogger(__name__)


def _field_of(array) -> str:
    return "complex" if np.iscomplexobj(array) else "real"


def _guard_dense(N: int, n: int):
    if N ** n > DENSE_CONFIG["max_entries"]:
        raise GuardExceeded(
            f"Dense storage of N^n = {N}^{n} scalars exceeds {DENSE_CONFIG['max_entries']}"
        )


@dataclass(frozen=True, eq=False)
class DenseForm:
    """
    Coefficient array c[j_1, ..., j_n] of the form
    T(x_1, ..., x_n) = sum c[j_1, ..., j_n] x_1(j_1) ... x_n(j_n).

    Operators into K^N are stored as forms of arity n + 1 whose last slot
    is the output coordinate; the norm engines take the target exponent
    separately.
    """
    coefficients: np.ndarray
    field: str = ""

    def __post_init__(self):
        c = np.asarray(self.coefficients)
        if c.ndim < 1:
            raise DimensionError("A form needs at least one slot")
        if len(set(c.shape)) != 1:
            raise DimensionError(f"All slots must share one dimension, got shape {c.shape}")
        _guard_dense(c.shape[0], c.ndim)
        actual = _field_of(c)
        declared = self.field or actual
        if declared not in ("real", "complex"):
            raise FieldError(f"Unknown field {declared!r}")
        if declared == "real" and actual == "complex":
            raise FieldError("Complex coefficients in a real form")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "field", declared)

    @classmethod
    def from_linear_map(cls, M) -> "DenseForm":
        """Linear map x -> M x as a form of arity 2, input slot first"""
        M = np.asarray(M)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError(f"Linear map must be square, got shape {M.shape}")
        return cls(M.T)

    @property
    def arity(self) -> int:
        return self.coefficients.ndim

    @property
    def dimension(self) -> int:
        return self.coefficients.shape[0]

    def to_json(self) -> dict:
        c = self.coefficients
        if self.field == "complex":
            coefficients = np.stack([c.real, c.imag], axis=-1).tolist()
        else:
            coefficients = c.tolist()
        return {"arity": self.arity, "dimension": self.dimension, "field": self.field,
                "coefficients": coefficients}

    @classmethod
    def from_json(cls, data: dict) -> "DenseForm":
        c = np.array(data["coefficients"])
        if data["field"] == "complex":
            c = c[..., 0] + 1j * c[..., 1]
        return cls(c, data["field"])


def _check_vectors(T: DenseForm, vectors: Sequence, count: int) -> list:
    if len(vectors) != count:
        raise DimensionError(f"Expected {count} vectors, got {len(vectors)}")
    checked = []
    for i, x in enumerate(vectors):
        x = np.asarray(x)
        if x.shape != (T.dimension,):
            raise DimensionError(f"Slot {i + 1} needs length {T.dimension}, got shape {x.shape}")
        if T.field == "real" and np.iscomplexobj(x):
            raise FieldError(f"Complex vector in slot {i + 1} of a real form")
        checked.append(x)
    return checked


def evaluate_form(T: DenseForm, *vectors):
    """sum c[j_1, ..., j_n] x_1(j_1) ... x_n(j_n)"""
    vectors = _check_vectors(T, vectors, T.arity)
    result = T.coefficients
    for x in vectors:
        result = np.tensordot(x, result, axes=([0], [0]))
    return result[()]


def slot_functional(T: DenseForm, vectors: Sequence, slot: int) -> np.ndarray:
    """
    Coefficients of the linear functional induced on `slot` when every other
    slot is fixed; the entry for `slot` in `vectors` is ignored.
    """
    if not 0 <= slot < T.arity:
        raise DimensionError(f"Slot {slot} out of range for arity {T.arity}")
    arr = np.moveaxis(T.coefficients, slot, -1)
    for i, x in enumerate(vectors):
        if i == slot:
            continue
        arr = np.tensordot(x, arr, axes=([0], [0]))
    return arr


def precompose(T: DenseForm, maps: Sequence[Optional[np.ndarray]]) -> DenseForm:
    """(x_1, ..., x_n) -> T(M_1 x_1, ..., M_n x_n); None stands for the identity"""
    if len(maps) != T.arity:
        raise DimensionError(f"Expected {T.arity} maps, got {len(maps)}")
    arr = T.coefficients
    for slot, M in enumerate(maps):
        if M is None:
            continue
        M = np.asarray(M)
        if M.shape != (T.dimension, T.dimension):
            raise DimensionError(f"Map for slot {slot + 1} has shape {M.shape}")
        if T.field == "real" and np.iscomplexobj(M):
            raise FieldError(f"Complex map for slot {slot + 1} of a real form")
        arr = np.moveaxis(np.tensordot(arr, M, axes=([slot], [0])), -1, slot)
    return DenseForm(arr)


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    """
    T_alpha(x_1, ..., x_n) = sum_k alpha(k) x_1(k) ... x_n(k) e_k on the finite
    section, viewed as an n-linear operator l_p -> l_q. Its scalar-valued
    counterpart phi_alpha sums the coordinates instead.
    """
    alpha: np.ndarray
    n: int
    p: Exponent = ONE
    q: Exponent = INF
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        alpha = np.asarray(self.alpha)
        if alpha.ndim != 1:
            raise DimensionError(f"Coefficients must be a vector, got shape {alpha.shape}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise DimensionError(f"Arity must be a positive integer, got {self.n!r}")
        alpha = alpha.copy()
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", Exponent.parse(self.p))
        object.__setattr__(self, "q", Exponent.parse(self.q))

    @property
    def dimension(self) -> int:
        return self.alpha.shape[0]

    @property
    def field(self) -> str:
        return _field_of(self.alpha)

    def apply(self, *vectors) -> np.ndarray:
        if len(vectors) != self.n:
            raise DimensionError(f"Expected {self.n} vectors, got {len(vectors)}")
        out = self.alpha
        for x in vectors:
            x = np.asarray(x)
            if x.shape != (self.dimension,):
                raise DimensionError(f"Vector of shape {x.shape} for dimension {self.dimension}")
            out = out * x
        return out

    def evaluate_scalar(self, *vectors):
        """phi_alpha(x_1, ..., x_n)"""
        return self.apply(*vectors).sum()

    def to_dense(self, kind: str = "form") -> DenseForm:
        """Materialize phi_alpha (kind='form') or T_alpha (kind='operator')"""
        arity = self.n if kind == "form" else self.n + 1
        N = self.dimension
        _guard_dense(N, arity)
        c = np.zeros((N,) * arity, dtype=self.alpha.dtype)
        idx = np.arange(N)
        c[(idx,) * arity] = self.alpha
        return DenseForm(c)

    def to_json(self) -> dict:
        if self.field == "complex":
            alpha = [[float(z.real), float(z.imag)] for z in self.alpha]
        else:
            alpha = self.alpha.tolist()
        return {"n": self.n, "p": str(self.p), "q": str(self.q), "dimension": self.dimension,
                "field": self.field, "alpha": alpha}

    @classmethod
    def from_json(cls, data: dict) -> "DiagonalOperator":
        if data.get("field") == "complex":
            alpha = np.array([complex(re, im) for re, im in data["alpha"]])
        else:
            alpha = np.array(data["alpha"])
        return cls(alpha, data["n"], data["p"], data["q"])


def phi_form(N: int, n: int, p: ExponentLike = ONE, q: ExponentLike = INF) -> DiagonalOperator:
    """Phi_N: all coefficients 1 on the first N coordinates"""
    if N < 1:
        raise DimensionError(f"Dimension must be positive, got {N}")
    return DiagonalOperator(np.ones(N, dtype=np.int64), n, p, q)


def bh_form(A: WalshMatrix, n: int) -> DenseForm:
    """
    L_N(x_1, ..., x_n) = sum_{j,k,l} a_jl a_lk x_1(j) x_2(k) x_3(l) ... x_n(l),
    so c[j, k, l, ..., l] = a_jl a_lk and every other entry vanishes.
    """
    if n < 3:
        raise DimensionError(f"L_N is defined for n >= 3, got {n}")
    N = A.N
    _guard_dense(N, n)
    a = A.entries
    c = np.zeros((N,) * n, dtype=a.dtype)
    for l in range(N):
        c[(slice(None), slice(None)) + (l,) * (n - 2)] = np.outer(a[:, l], a[l, :])
    return DenseForm(c, A.field)


def bh_evaluate(A: WalshMatrix, *vectors):
    """Sparse evaluation of L_N: sum_l (A^T x_1)_l (A x_2)_l x_3(l) ... x_n(l)"""
    if len(vectors) < 3:
        raise DimensionError(f"L_N takes at least 3 vectors, got {len(vectors)}")
    a = A.entries
    xs = [np.asarray(x) for x in vectors]
    for i, x in enumerate(xs):
        if x.shape != (A.N,):
            raise DimensionError(f"Slot {i + 1} needs length {A.N}, got shape {x.shape}")
    prod = (a.T @ xs[0]) * (a @ xs[1])
    for x in xs[2:]:
        prod = prod * x
    return prod.sum()


@dataclass(frozen=True)
class CompositionReport:
    passed: bool
    N: int
    n: int
    field: str
    trials: int
    seed: int
    tolerance: float
    max_relative_residual: float

    def to_json(self) -> dict:
        return {
            "type": "composition",
            "passed": self.passed,
            "N": self.N,
            "n": self.n,
            "field": self.field,
            "trials": self.trials,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "residual": self.max_relative_residual,
        }


def _relative_residual(lhs, rhs, floor: float = 0.0) -> float:
    scale = max(abs(lhs), abs(rhs), floor)
    if scale == 0:
        return 0.0
    return float(abs(lhs - rhs) / scale)


def random_vectors(rng: np.random.Generator, N: int, count: int, field: str) -> list:
    if field == "complex":
        return [rng.standard_normal(N) + 1j * rng.standard_normal(N) for _ in range(count)]
    return [rng.standard_normal(N) for _ in range(count)]


def composition_identity_check(A: WalshMatrix, n: int, trials: Optional[int] = None,
                               tol: Optional[float] = None,
                               seed: int = DEFAULT_SEED) -> CompositionReport:
    """
    Compare L_N(xi_N x_1, xi_N x_2, x_3, ..., x_n) with N^2 sum_r x_1(r) ... x_n(r)
    on seeded random inputs, the left side evaluated on the dense form.
    """
    if n < 3:
        raise DimensionError(f"The composition identity needs n >= 3, got {n}")
    trials = COMPOSITION_CONFIG["trials"] if trials is None else trials
    tol = COMPOSITION_CONFIG["tol"] if tol is None else tol
    rng = np.random.default_rng(seed)
    L = bh_form(A, n)
    xi = xi_matrix(A)
    N = A.N

    worst = 0.0
    for _ in range(trials):
        xs = random_vectors(rng, N, n, A.field)
        lhs = evaluate_form(L, xi @ xs[0], xi @ xs[1], *xs[2:])
        terms = np.prod(np.stack(xs), axis=0)
        rhs = N ** 2 * terms.sum()
        # residuals are measured against the size of the summands
        worst = max(worst, _relative_residual(lhs, rhs, N ** 2 * float(np.abs(terms).sum())))

    logger.debug("Composition identity N=%d n=%d: max residual %.3g", N, n, worst)
    return CompositionReport(
        passed=worst <= tol, N=N, n=n, field=A.field, trials=trials, seed=seed,
        tolerance=tol, max_relative_residual=worst,
    )
