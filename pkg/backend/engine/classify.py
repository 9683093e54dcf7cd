"""
Classification of diagonal multilinear operators and forms by ideal

For each ideal (nuclear N, integral I, extendible E, bounded L) the space
of coefficient sequences alpha for which T_alpha (or phi_alpha) belongs to
the ideal, the coincidence tables derived from them, membership of power
sequences k^-s and growth scans of finite sections.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from config.settings import GROWTH_CONFIG
from backend.engine.errors import DomainError
from backend.engine.exponents import (
    INF, ONE, TWO, Exponent, ExponentLike, conjugate, holder_r, nuclear_t, parse_rational,
)
from backend.engine.multilinear import DiagonalOperator
from backend.engine.norms import diagonal_norm_exact
from backend.engine.ideals import nuclear_integral_exact

logger = logging.getLogger(__name__)


class Ideal(Enum):
    N = "N"
    I = "I"
    E = "E"
    L = "L"

    @classmethod
    def parse(cls, text: Union[str, "Ideal"]) -> "Ideal":
        if isinstance(text, Ideal):
            return text
        try:
            return cls(str(text).strip().upper())
        except ValueError as e:
            raise DomainError(f"Unknown ideal {text!r}; expected one of N, I, E, L") from e


IDEALS = (Ideal.N, Ideal.I, Ideal.E, Ideal.L)


class SpaceKind(Enum):
    LU = "lu"
    C0 = "c0"
    LINF = "linf"
    BRACKET = "bracket"


def _space_name(u: Exponent) -> str:
    if u.is_infinite:
        return "ℓ∞"
    if u.value.denominator == 1:
        return f"ℓ{u.value.numerator}"
    return f"ℓ_{{{u}}}"


@dataclass(frozen=True)
class SpaceTag:
    """
    l_u, c0, l_inf, or the unresolved bracket l_a <= space <= l_{b+eps}.
    For a bracket `exponent` is a and `upper` is b.
    """
    kind: SpaceKind
    exponent: Optional[Exponent] = None
    upper: Optional[Exponent] = None

    @classmethod
    def lu(cls, u: ExponentLike) -> "SpaceTag":
        u = Exponent.parse(u)
        if u.is_infinite:
            return cls.linf()
        return cls(SpaceKind.LU, u)

    @classmethod
    def c0(cls) -> "SpaceTag":
        return cls(SpaceKind.C0)

    @classmethod
    def linf(cls) -> "SpaceTag":
        return cls(SpaceKind.LINF)

    @classmethod
    def bracket(cls, a: ExponentLike, b: ExponentLike) -> "SpaceTag":
        return cls(SpaceKind.BRACKET, Exponent.parse(a), Exponent.parse(b))

    @property
    def is_bracket(self) -> bool:
        return self.kind is SpaceKind.BRACKET

    def order_keys(self) -> Tuple[tuple, tuple]:
        """Lowest and highest position in the chain l_1 < l_u < c0 < l_inf"""
        if self.kind is SpaceKind.LU:
            key = (0, self.exponent.value, 0)
            return key, key
        if self.kind is SpaceKind.C0:
            return (1,), (1,)
        if self.kind is SpaceKind.LINF:
            return (2,), (2,)
        low = (0, self.exponent.value, 0)
        high = (2,) if self.upper.is_infinite else (0, self.upper.value, 1)
        return low, high

    def __str__(self) -> str:
        if self.kind is SpaceKind.LU:
            return _space_name(self.exponent)
        if self.kind is SpaceKind.C0:
            return "c0"
        if self.kind is SpaceKind.LINF:
            return "ℓ∞"
        return f"[{_space_name(self.exponent)}, ℓ_{{{self.upper}+ε}}]"

    def to_json(self) -> dict:
        data = {"kind": self.kind.value,
                "exponent": None if self.exponent is None else str(self.exponent)}
        if self.upper is not None:
            data["upper"] = str(self.upper)
        return data

    @classmethod
    def from_json(cls, data: dict) -> "SpaceTag":
        kind = SpaceKind(data["kind"])
        exponent = data.get("exponent")
        upper = data.get("upper")
        return cls(kind,
                   None if exponent is None else Exponent.parse(exponent),
                   None if upper is None else Exponent.parse(upper))


class Marker(Enum):
    EQUAL = "="
    STRICT = "⊊"
    UNRESOLVED = "⊆"


def relation(smaller: SpaceTag, larger: SpaceTag) -> Marker:
    """Inclusion marker between the spaces of two adjacent ideals"""
    if smaller == larger and not smaller.is_bracket:
        return Marker.EQUAL
    if larger.is_bracket and smaller.kind is SpaceKind.LU and smaller.exponent == larger.exponent:
        return Marker.UNRESOLVED
    if smaller.is_bracket and larger.kind is SpaceKind.LU and larger.exponent == smaller.upper:
        return Marker.UNRESOLVED
    return Marker.STRICT


@dataclass(frozen=True)
class Classification:
    kind: str
    p: Exponent
    q: Optional[Exponent]
    n: int
    spaces: Dict[Ideal, SpaceTag]
    regime: str = ""

    @property
    def markers(self) -> List[Marker]:
        tags = [self.spaces[i] for i in IDEALS]
        return [relation(a, b) for a, b in zip(tags, tags[1:])]

    def is_nested(self) -> bool:
        tags = [self.spaces[i] for i in IDEALS]
        return all(a.order_keys()[0] <= b.order_keys()[0] and a.order_keys()[1] <= b.order_keys()[1]
                   for a, b in zip(tags, tags[1:]))

    def to_json(self) -> dict:
        return {
            "type": "classification",
            "kind": self.kind,
            "p": str(self.p),
            "q": None if self.q is None else str(self.q),
            "n": self.n,
            "regime": self.regime,
            "ideals": [{"ideal": i.value, "space": self.spaces[i].to_json()} for i in IDEALS],
            "markers": [m.value for m in self.markers],
            "chain": render_chain(self),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Classification":
        spaces = {Ideal(item["ideal"]): SpaceTag.from_json(item["space"]) for item in data["ideals"]}
        return cls(
            kind=data["kind"],
            p=Exponent.parse(data["p"]),
            q=None if data["q"] is None else Exponent.parse(data["q"]),
            n=data["n"],
            spaces=spaces,
            regime=data.get("regime", ""),
        )


def _check_n(n: int):
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise DomainError(f"Arity must be a positive integer, got {n!r}")


def _holder_tag(p: Exponent, q: Exponent, n: int) -> SpaceTag:
    return SpaceTag.lu(holder_r(p, q, n).space_exponent)


def classify_operators(p: ExponentLike, q: ExponentLike, n: int) -> Classification:
    """
    Spaces l_n(A, p, q) of diagonal n-linear operators l_p -> l_q.

    Nuclear and integral: l_t with t = nuclear_t(p, q, n), except at
    (1, inf) where the nuclear space is c0. Bounded: from holder_r.
    Extendible by region of (p, q):
      p = 1               l_inf
      p >= 2              l_q
      1 < p < 2, q = 1    l_{p'/2}
      1 < p < 2, q > p'   l_q
      1 < p < 2, else     bracket [l_q, l_{p'+eps}]
    """
    _check_n(n)
    p, q = Exponent.parse(p), Exponent.parse(q)
    dual = conjugate(p)
    t_tag = SpaceTag.lu(nuclear_t(p, q, n))

    if p == ONE:
        regime = "p=1"
        extendible = SpaceTag.linf()
    elif p >= TWO:
        regime = "p>=2"
        extendible = SpaceTag.lu(q)
    elif q == ONE:
        regime = "1<p<2, q=1"
        extendible = SpaceTag.lu(Exponent(dual.value / 2))
    elif q > dual:
        regime = "1<p<2, q>p'"
        extendible = SpaceTag.lu(q)
    else:
        regime = "1<p<2, 1<q<=p'"
        extendible = SpaceTag.bracket(q, dual)

    nuclear = SpaceTag.c0() if p == ONE and q.is_infinite else t_tag
    result = Classification(
        kind="operators", p=p, q=q, n=n, regime=regime,
        spaces={Ideal.N: nuclear, Ideal.I: t_tag, Ideal.E: extendible,
                Ideal.L: _holder_tag(p, q, n)},
    )
    logger.debug("classify_operators(%s, %s, %d): %s", p, q, n, render_chain(result))
    return result


def classify_forms(p: ExponentLike, n: int) -> Classification:
    """
    Spaces l_n(A, p) of diagonal n-linear forms on l_p.

      p = 1          c0, l_inf, l_inf, l_inf
      1 < p < 2      l_{max(p'/n, 1)} twice, l_{p'/2}, l_inf
      p >= 2         l_1 three times, l_{p/(p-n)} for n < p else l_inf
    Linear functionals (n = 1) are l_{p'} for every ideal.
    """
    _check_n(n)
    p = Exponent.parse(p)
    dual = conjugate(p)

    if n == 1:
        tag = SpaceTag.lu(dual)
        spaces = {i: tag for i in IDEALS}
        return Classification("forms", p, None, n, spaces, regime="n=1")

    t_tag = SpaceTag.lu(nuclear_t(p, INF, n))
    bounded = _holder_tag(p, ONE, n)
    if p == ONE:
        regime, nuclear, extendible = "p=1", SpaceTag.c0(), SpaceTag.linf()
    elif p < TWO:
        regime, nuclear, extendible = "1<p<2", t_tag, SpaceTag.lu(Exponent(dual.value / 2))
    else:
        regime, nuclear, extendible = "p>=2", t_tag, SpaceTag.lu(ONE)
    return Classification(
        kind="forms", p=p, q=None, n=n, regime=regime,
        spaces={Ideal.N: nuclear, Ideal.I: t_tag, Ideal.E: extendible, Ideal.L: bounded},
    )


@dataclass(frozen=True)
class TableRows:
    table1: str
    table2: str

    def to_json(self) -> dict:
        return {"type": "tables", "table1": self.table1, "table2": self.table2}


def _row2(first: bool, second: bool) -> str:
    return f"I {'=' if first else '≠'} E {'=' if second else '≠'} L"


def coincidence_tables(p: ExponentLike, q: ExponentLike) -> TableRows:
    """Rows of the tables deciding N = I and the relations among I, E, L"""
    p, q = Exponent.parse(p), Exponent.parse(q)
    table1 = "N ≠ I" if p == ONE and q.is_infinite else "N = I"

    if (p == ONE and q.is_infinite) or (p.is_infinite and q == ONE):
        table2 = _row2(True, True)
    elif q == ONE and TWO <= p and not p.is_infinite:
        table2 = _row2(True, False)
    elif (p == ONE and not q.is_infinite) or (ONE < p and not p.is_infinite and q.is_infinite) \
            or (p.is_infinite and q > ONE):
        table2 = _row2(False, True)
    else:
        table2 = _row2(False, False)
    return TableRows(table1, table2)


def tables_from_classification(c: Classification) -> TableRows:
    """Table rows read off the spaces of an operator classification"""
    markers = c.markers
    table1 = "N = I" if markers[0] is Marker.EQUAL else "N ≠ I"
    return TableRows(table1, _row2(markers[1] is Marker.EQUAL, markers[2] is Marker.EQUAL))


def power_membership(s: Union[str, float, Fraction], tag: SpaceTag) -> Optional[bool]:
    """
    Whether k^-s lies in the space; None when a bracket leaves it open
    (1/b <= s <= 1/a for the bracket [l_a, l_{b+eps}]).
    """
    s = parse_rational(s)
    if s < 0:
        raise DomainError(f"Decay exponent must be >= 0, got {s}")
    if tag.kind is SpaceKind.LU:
        return s * tag.exponent.value > 1
    if tag.kind is SpaceKind.C0:
        return s > 0
    if tag.kind is SpaceKind.LINF:
        return True
    if s > tag.exponent.reciprocal:
        return True
    if s < tag.upper.reciprocal:
        return False
    return None


@dataclass(frozen=True)
class GrowthReport:
    p: Exponent
    q: Exponent
    n: int
    ideal: Ideal
    s: Fraction
    exponent: Exponent
    grid: List[int]
    norms: List[float]
    raw_slope: float
    slope: float
    bounded: bool
    membership: Optional[bool]
    threshold: float = field(default_factory=lambda: GROWTH_CONFIG["threshold"])

    @property
    def agrees(self) -> Optional[bool]:
        return None if self.membership is None else self.bounded == self.membership

    def to_json(self) -> dict:
        return {
            "type": "growth",
            "p": str(self.p), "q": str(self.q), "n": self.n,
            "ideal": self.ideal.value,
            "s": str(self.s),
            "u": str(self.exponent),
            "grid": self.grid,
            "norms": self.norms,
            "raw_slope": self.raw_slope,
            "slope": self.slope,
            "threshold": self.threshold,
            "bounded": self.bounded,
            "membership": self.membership,
            "agrees": self.agrees,
        }


def _ideal_norm(alpha: np.ndarray, p: Exponent, q: Exponent, n: int, ideal: Ideal) -> float:
    op = DiagonalOperator(alpha, n, p, q)
    if ideal is Ideal.L:
        return diagonal_norm_exact(op).value
    return nuclear_integral_exact(op).integral.value


def _fit(xs: Sequence[float], ys: Sequence[float]) -> float:
    return float(stats.linregress(xs, ys).slope)


def growth_scan(p: ExponentLike, q: ExponentLike, n: int, ideal: Union[str, Ideal],
                s: Union[str, float, Fraction], grid: Optional[Sequence[int]] = None) -> GrowthReport:
    """
    Growth of the exact ideal norm of T_alpha, alpha(k) = k^-s, along a dyadic
    grid of truncations N_0 < N_1 < ...

    The u-th powers of the norms on the blocks (N_j, N_{j+1}] behave like
    N_j^e; max(e, 0)/u is the growth slope of the truncated norms, and the
    sequence is declared bounded when it stays below the threshold. The raw
    log-log slope of the truncated norms is reported alongside.
    """
    ideal = Ideal.parse(ideal)
    if ideal is Ideal.E:
        raise DomainError("No exact finite-section formula for E; use the extendibility diagnostic")
    _check_n(n)
    p, q = Exponent.parse(p), Exponent.parse(q)
    s = parse_rational(s)
    if s < 0:
        raise DomainError(f"Decay exponent must be >= 0, got {s}")
    if grid is None:
        grid = [1 << j for j in range(GROWTH_CONFIG["min_log2"], GROWTH_CONFIG["max_log2"] + 1)]
    grid = sorted(int(g) for g in grid)
    if len(grid) < 3:
        raise DomainError("Growth scans need at least three grid points")

    alpha = np.arange(1, grid[-1] + 1, dtype=float) ** -float(s)
    u = holder_r(p, q, n).space_exponent if ideal is Ideal.L else nuclear_t(p, q, n)
    norms = [_ideal_norm(alpha[:N], p, q, n, ideal) for N in grid]
    raw_slope = _fit(np.log(grid), np.log(norms))

    if u.is_infinite:
        slope = 0.0
    else:
        points = []
        for lo, hi in zip(grid, grid[1:]):
            block = _ideal_norm(alpha[lo:hi], p, q, n, ideal) ** float(u)
            if block > 0:
                points.append((np.log(lo), np.log(block)))
        if len(points) < 2:
            slope = 0.0
        else:
            xs, ys = zip(*points)
            slope = max(_fit(xs, ys), 0.0) / float(u)

    threshold = GROWTH_CONFIG["threshold"]
    spaces = classify_operators(p, q, n).spaces
    report = GrowthReport(
        p=p, q=q, n=n, ideal=ideal, s=s, exponent=u, grid=list(grid),
        norms=norms, raw_slope=raw_slope, slope=slope, bounded=slope < threshold,
        membership=power_membership(s, spaces[ideal]), threshold=threshold,
    )
    logger.info("Growth scan %s p=%s q=%s n=%d s=%s: slope %.4f", ideal.value, p, q, n, s, slope)
    return report


def render_chain(c: Classification) -> str:
    """
    Text chain of the classification, equal spaces grouped:
    "ℓ1 = N = I ⊊ ℓ_{3/2} = E ⊊ ℓ∞ = L"; an unresolved extendible space
    is written "ℓ_{3/2} ⊆ E ⊆ ℓ_{3+ε}".
    """
    markers = c.markers
    parts = []
    groups: List[List[Ideal]] = [[IDEALS[0]]]
    for ideal, marker in zip(IDEALS[1:], markers):
        if marker is Marker.EQUAL:
            groups[-1].append(ideal)
        else:
            groups.append([ideal])

    for idx, group in enumerate(groups):
        tag = c.spaces[group[0]]
        names = " = ".join(i.value for i in group)
        if tag.is_bracket:
            text = f"{_space_name(tag.exponent)} ⊆ {names} ⊆ ℓ_{{{tag.upper}+ε}}"
        else:
            text = f"{tag} = {names}"
        if idx:
            boundary = IDEALS.index(group[0]) - 1
            parts.append(markers[boundary].value)
        parts.append(text)
    return " ".join(parts)
