"""
Walsh matrices (Hadamard and Fourier) and the xi_N operator built from them

Indices in docstrings are 1-based; storage is 0-based numpy.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from config.settings import WALSH_CONFIG
from backend.engine.errors import DimensionError
from backend.engine.exponents import ExponentLike, conjugate

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WalshMatrix:
    """
    Square matrix with unimodular entries and orthogonal columns,
    sum_r a_rk conj(a_rl) = N delta_kl. Construction does not enforce the
    axioms; verify_walsh checks them.
    """
    entries: np.ndarray
    field: str

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError(f"Walsh matrix must be square, got shape {entries.shape}")
        if self.field not in ("real", "complex"):
            raise ValueError(f"Unknown field {self.field!r}")
        entries = entries.copy()
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_entries(cls, entries) -> "WalshMatrix":
        entries = np.asarray(entries)
        return cls(entries, "complex" if np.iscomplexobj(entries) else "real")

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def is_exact(self) -> bool:
        return np.issubdtype(self.entries.dtype, np.integer)

    def to_json(self) -> dict:
        if self.field == "complex":
            grid = [[[float(z.real), float(z.imag)] for z in row] for row in self.entries]
        else:
            grid = self.entries.tolist()
        return {"N": self.N, "field": self.field, "entries": grid}

    @classmethod
    def from_json(cls, data: dict) -> "WalshMatrix":
        if data["field"] == "complex":
            entries = np.array([[complex(re, im) for re, im in row] for row in data["entries"]])
        else:
            entries = np.array(data["entries"])
        return cls(entries, data["field"])


def hadamard(N: int) -> WalshMatrix:
    """
    Sylvester matrix A_{2^{m+1}} = [[A, A], [A, -A]] from A_2 = [[1, 1], [1, -1]],
    stored with exact integer entries.
    """
    if not isinstance(N, (int, np.integer)) or N < 2 or N & (N - 1):
        raise DimensionError(f"Hadamard matrices need N = 2^m with m >= 1, got {N}")
    return WalshMatrix(scipy.linalg.hadamard(int(N), dtype=np.int64), "real")


def fourier(N: int) -> WalshMatrix:
    """Fourier matrix a_kr = exp(2 pi i r k / N) with 1-based r, k"""
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise DimensionError(f"Fourier matrices need N >= 1, got {N}")
    idx = np.arange(1, N + 1)
    return WalshMatrix(np.exp(2j * np.pi * np.outer(idx, idx) / N), "complex")


def walsh(N: int, field: str = "real") -> WalshMatrix:
    """Hadamard matrix for the real field, Fourier matrix for the complex one"""
    return hadamard(N) if field == "real" else fourier(N)


@dataclass(frozen=True)
class WalshReport:
    passed: bool
    N: int
    field: str
    tolerance: float
    unimodular_residual: float
    symmetry_residual: float
    orthogonality_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.unimodular_residual, self.symmetry_residual, self.orthogonality_residual)

    def to_json(self) -> dict:
        return {
            "type": "walsh",
            "passed": self.passed,
            "N": self.N,
            "field": self.field,
            "tolerance": self.tolerance,
            "unimodular_residual": self.unimodular_residual,
            "symmetry_residual": self.symmetry_residual,
            "orthogonality_residual": self.orthogonality_residual,
            "residual": self.max_residual,
        }


def verify_walsh(A: WalshMatrix, tol: Optional[float] = None) -> WalshReport:
    """
    Check |a_kr| = 1, a_kr = a_rk and sum_r a_rk conj(a_rl) = N delta_kl.
    Integer matrices are checked exactly (default tol 0); floating ones
    default to WALSH_CONFIG tolerance scaled by N.
    """
    a = A.entries
    N = A.N
    if tol is None:
        tol = 0.0 if A.is_exact else WALSH_CONFIG["fourier_tol_per_dim"] * N

    if A.is_exact:
        unimodular = np.abs(np.abs(a) - 1).max()
        symmetry = np.abs(a - a.T).max()
        gram = a.T @ a
        orthogonality = np.abs(gram - N * np.eye(N, dtype=a.dtype)).max()
    else:
        unimodular = np.abs(np.abs(a) - 1.0).max()
        symmetry = np.abs(a - a.T).max()
        gram = a.T @ a.conj()
        orthogonality = np.abs(gram - N * np.eye(N)).max()

    report = WalshReport(
        passed=bool(max(unimodular, symmetry, orthogonality) <= tol),
        N=N,
        field=A.field,
        tolerance=float(tol),
        unimodular_residual=float(unimodular),
        symmetry_residual=float(symmetry),
        orthogonality_residual=float(orthogonality),
    )
    if not report.passed:
        logger.info("Walsh verification failed for N=%d: residual %g", N, report.max_residual)
    return report


def xi_matrix(A: WalshMatrix) -> np.ndarray:
    """Matrix of xi_N: entry (k, r) is conj(a_kr)"""
    return A.entries.conj() if A.field == "complex" else A.entries


def apply_xi(A: WalshMatrix, x) -> np.ndarray:
    """xi_N(x)(k) = sum_r conj(a_kr) x(r)"""
    x = np.asarray(x)
    if x.shape != (A.N,):
        raise DimensionError(f"xi_N needs a vector of length {A.N}, got shape {x.shape}")
    return xi_matrix(A) @ x


def xi_norm_bound(p: ExponentLike, N: int) -> float:
    """N^{1/p'}, the bound ||xi_N : l_p^N -> l_inf^N|| <= ||id : l_p -> l_1|| ||xi_N : l_1 -> l_inf||"""
    if N < 1:
        raise DimensionError(f"Dimension must be positive, got {N}")
    return float(N ** float(conjugate(p).reciprocal))
