"""
Exact arithmetic on extended exponents in [1, inf]

Exponents are stored as Fractions with a distinguished infinite value, so the
case splits of the classification (p = nq, q = p', p = 2, ...) are decided by
exact comparisons. Text grammar, used for input and output everywhere:
"inf" for infinity, "a/b" for rationals, plain decimal literals.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import total_ordering
from typing import Optional, Union

from backend.engine.errors import ExponentError

logger = logging.getLogger(__name__)

_INFINITY_WORDS = {"inf", "infinity", "∞", "+inf"}

ExponentLike = Union["Exponent", int, float, str, Fraction]


def parse_rational(text: Union[str, int, float, Fraction]) -> Fraction:
    """Parse a finite rational in the exponent grammar (no infinity)"""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise ExponentError(f"Not a number: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        if text != text or text in (float("inf"), float("-inf")):
            raise ExponentError(f"Not a finite number: {text!r}")
        # repr gives the shortest decimal that round-trips
        return Fraction(repr(text))
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ExponentError(f"Cannot parse {text!r} as a rational: {e}") from e


@total_ordering
@dataclass(frozen=True)
class Exponent:
    """An element of [1, inf]; value None stands for infinity"""
    value: Optional[Fraction]

    def __post_init__(self):
        if self.value is not None:
            if not isinstance(self.value, Fraction):
                object.__setattr__(self, "value", Fraction(self.value))
            if self.value < 1:
                raise ExponentError(f"Exponent must be >= 1, got {self.value}")

    @classmethod
    def infinity(cls) -> "Exponent":
        return cls(None)

    @classmethod
    def parse(cls, text: ExponentLike) -> "Exponent":
        """Build an exponent from text, numbers or another exponent"""
        if isinstance(text, Exponent):
            return text
        if isinstance(text, float) and text == float("inf"):
            return cls(None)
        if isinstance(text, str) and text.strip().lower() in _INFINITY_WORDS:
            return cls(None)
        return cls(parse_rational(text))

    @classmethod
    def from_reciprocal(cls, reciprocal: Fraction) -> "Exponent":
        """Exponent u with 1/u = reciprocal; reciprocal 0 gives infinity"""
        reciprocal = Fraction(reciprocal)
        if reciprocal < 0 or reciprocal > 1:
            raise ExponentError(f"Reciprocal {reciprocal} is outside [0, 1]")
        if reciprocal == 0:
            return cls(None)
        return cls(1 / reciprocal)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    @property
    def reciprocal(self) -> Fraction:
        if self.value is None:
            return Fraction(0)
        return 1 / self.value

    def __float__(self) -> float:
        return float("inf") if self.value is None else float(self.value)

    def __lt__(self, other):
        other = Exponent.parse(other)
        if self.value is None:
            return False
        if other.value is None:
            return True
        return self.value < other.value

    def __str__(self) -> str:
        return "inf" if self.value is None else str(self.value)

    def __repr__(self) -> str:
        return f"Exponent({self})"

    def to_json(self) -> str:
        return str(self)


ONE = Exponent(Fraction(1))
TWO = Exponent(Fraction(2))
INF = Exponent.infinity()


def conjugate(p: ExponentLike) -> Exponent:
    """p' with 1/p + 1/p' = 1; 1 and inf are conjugate to each other"""
    p = Exponent.parse(p)
    return Exponent.from_reciprocal(1 - p.reciprocal)


class HolderCase(Enum):
    BOUNDED = "bounded"
    FINITE = "finite"


@dataclass(frozen=True)
class HolderResult:
    """Space of bounded diagonal n-linear operators l_p -> l_q"""
    case: HolderCase
    r: Optional[Exponent] = None

    @property
    def space_exponent(self) -> Exponent:
        return INF if self.case is HolderCase.BOUNDED else self.r

    def to_json(self) -> dict:
        return {"case": self.case.value, "r": None if self.r is None else str(self.r)}


def _check_arity(n: int):
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ExponentError(f"Arity must be a positive integer, got {n!r}")


def holder_r(p: ExponentLike, q: ExponentLike, n: int) -> HolderResult:
    """
    l_inf when p <= nq (with n*inf = inf), otherwise l_r with
    1/r = 1/q - n/p. The boundary p = nq belongs to the bounded branch.
    """
    _check_arity(n)
    p, q = Exponent.parse(p), Exponent.parse(q)
    if q.is_infinite:
        bounded = True
    elif p.is_infinite:
        bounded = False
    else:
        bounded = p.value <= n * q.value
    if bounded:
        return HolderResult(HolderCase.BOUNDED)
    r = Exponent.from_reciprocal(q.reciprocal - n * p.reciprocal)
    logger.debug("holder_r(p=%s, q=%s, n=%d) -> r=%s", p, q, n, r)
    return HolderResult(HolderCase.FINITE, r)


def nuclear_t(p: ExponentLike, q: ExponentLike, n: int) -> Exponent:
    """t = max((n/p' + 1/q)^{-1}, 1); infinite only for p = 1, q = inf"""
    _check_arity(n)
    p, q = Exponent.parse(p), Exponent.parse(q)
    s = n * conjugate(p).reciprocal + q.reciprocal
    if s >= 1:
        return ONE
    return Exponent.from_reciprocal(s)
