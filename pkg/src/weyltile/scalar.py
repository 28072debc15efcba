"""Exact arithmetic in the real field Q(sqrt2, sqrt3).

Every coordinate appearing in the rank-2 constructions lives in the
4-dimensional Q-vector space with basis (1, sqrt2, sqrt3, sqrt6), so a
fixed-basis representation over arbitrary-precision rationals is enough:
no generic algebraic-number machinery needed.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import isqrt
from typing import NamedTuple, Union

_RatLike = Union[int, Fraction]

# floor(sqrt(m) * 2^k) cache, keyed by (m, k)
_SQRT_LO: dict[tuple[int, int], int] = {}

_FLOAT_SQRT2 = math.sqrt(2.0)
_FLOAT_SQRT3 = math.sqrt(3.0)
_FLOAT_SQRT6 = math.sqrt(6.0)


def _sqrt_lo(m: int, k: int) -> int:
    key = (m, k)
    v = _SQRT_LO.get(key)
    if v is None:
        v = isqrt(m << (2 * k))
        _SQRT_LO[key] = v
    return v


def _as_fraction(v: _RatLike) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    raise TypeError(f"expected int or Fraction, got {type(v).__name__}")


class Approximation(NamedTuple):
    """Floating approximation with a rigorous absolute error bound."""

    value: float
    bound: Fraction


class Scalar:
    """Element a + b*sqrt2 + c*sqrt3 + d*sqrt6 with rational a, b, c, d."""

    __slots__ = ("a", "b", "c", "d", "_hash")

    def __init__(self, a: _RatLike = 0, b: _RatLike = 0, c: _RatLike = 0,
                 d: _RatLike = 0) -> None:
        object.__setattr__(self, "a", _as_fraction(a))
        object.__setattr__(self, "b", _as_fraction(b))
        object.__setattr__(self, "c", _as_fraction(c))
        object.__setattr__(self, "d", _as_fraction(d))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):  # immutable
        raise AttributeError("Scalar is immutable")

    # -- constructors ------------------------------------------------

    @classmethod
    def _raw(cls, a: Fraction, b: Fraction, c: Fraction,
             d: Fraction) -> "Scalar":
        """Internal constructor for coefficients already normalized."""
        out = object.__new__(cls)
        object.__setattr__(out, "a", a)
        object.__setattr__(out, "b", b)
        object.__setattr__(out, "c", c)
        object.__setattr__(out, "d", d)
        object.__setattr__(out, "_hash", None)
        return out

    @classmethod
    def rational(cls, p: _RatLike, q: _RatLike = 1) -> "Scalar":
        return cls(Fraction(_as_fraction(p), _as_fraction(q)))

    @classmethod
    def coerce(cls, v: "Scalar | int | Fraction") -> "Scalar":
        if isinstance(v, Scalar):
            return v
        return cls(_as_fraction(v))

    # -- predicates --------------------------------------------------

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0 and self.c == 0 and self.d == 0

    def is_rational(self) -> bool:
        return self.b == 0 and self.c == 0 and self.d == 0

    def is_integer(self) -> bool:
        return self.is_rational() and self.a.denominator == 1

    # -- ring operations ---------------------------------------------

    def __add__(self, other) -> "Scalar":
        o = other if isinstance(other, Scalar) else Scalar.coerce(other)
        # reuse coefficients when one side is zero: skips a gcd each
        return Scalar._raw(
            self.a + o.a if self.a and o.a else (self.a or o.a),
            self.b + o.b if self.b and o.b else (self.b or o.b),
            self.c + o.c if self.c and o.c else (self.c or o.c),
            self.d + o.d if self.d and o.d else (self.d or o.d),
        )

    __radd__ = __add__

    def __sub__(self, other) -> "Scalar":
        o = other if isinstance(other, Scalar) else Scalar.coerce(other)
        return Scalar._raw(
            self.a - o.a if o.a else self.a,
            self.b - o.b if o.b else self.b,
            self.c - o.c if o.c else self.c,
            self.d - o.d if o.d else self.d,
        )

    def __rsub__(self, other) -> "Scalar":
        return Scalar.coerce(other) - self

    def __neg__(self) -> "Scalar":
        return Scalar._raw(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, other) -> "Scalar":
        o = other if isinstance(other, Scalar) else Scalar.coerce(other)
        a1, b1, c1, d1 = self.a, self.b, self.c, self.d
        a2, b2, c2, d2 = o.a, o.b, o.c, o.d
        # skip the irrational blocks when either factor is rational;
        # coordinates usually have at most two nonzero components
        if not b1 and not c1 and not d1:
            if not a1:
                return ZERO
            return Scalar._raw(a1 * a2,
                               a1 * b2 if b2 else b2,
                               a1 * c2 if c2 else c2,
                               a1 * d2 if d2 else d2)
        if not b2 and not c2 and not d2:
            if not a2:
                return ZERO
            return Scalar._raw(a1 * a2,
                               b1 * a2 if b1 else b1,
                               c1 * a2 if c1 else c1,
                               d1 * a2 if d1 else d1)
        # sqrt2*sqrt3 = sqrt6, sqrt2*sqrt6 = 2*sqrt3, sqrt3*sqrt6 = 3*sqrt2
        return Scalar._raw(
            a1 * a2 + 2 * b1 * b2 + 3 * c1 * c2 + 6 * d1 * d2,
            a1 * b2 + b1 * a2 + 3 * (c1 * d2 + d1 * c2),
            a1 * c2 + c1 * a2 + 2 * (b1 * d2 + d1 * b2),
            a1 * d2 + d1 * a2 + b1 * c2 + c1 * b2,
        )

    __rmul__ = __mul__

    def conjugates(self) -> tuple["Scalar", "Scalar", "Scalar"]:
        """Images under the Galois group: flip signs of sqrt2 and/or sqrt3."""
        a, b, c, d = self.a, self.b, self.c, self.d
        return (
            Scalar(a, -b, c, -d),   # sqrt2 -> -sqrt2
            Scalar(a, b, -c, -d),   # sqrt3 -> -sqrt3
            Scalar(a, -b, -c, d),   # both
        )

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero Scalar")
        s1, s2, s3 = self.conjugates()
        numer = s1 * s2 * s3
        norm = self * numer  # rational: product of all four conjugates
        assert norm.is_rational() and norm.a != 0
        inv = 1 / norm.a
        return Scalar(numer.a * inv, numer.b * inv, numer.c * inv,
                      numer.d * inv)

    def __truediv__(self, other) -> "Scalar":
        o = Scalar.coerce(other)
        return self * o.inverse()

    def __rtruediv__(self, other) -> "Scalar":
        return Scalar.coerce(other) * self.inverse()

    # -- comparisons (by real value; equals iff same coefficients) ----

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Scalar.coerce(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return (self.a == other.a and self.b == other.b
                and self.c == other.c and self.d == other.d)

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash((self.a, self.b, self.c, self.d))
            object.__setattr__(self, "_hash", h)
        return h

    def sign(self) -> int:
        """Exact sign of the real value, by interval refinement.

        Terminates because a nonzero element of the field has nonzero
        value (the basis is linearly independent over Q).
        """
        if self.is_zero():
            return 0
        if self.is_rational():
            return 1 if self.a > 0 else -1
        # integer coefficients over a common positive denominator
        den = (self.a.denominator * self.b.denominator
               * self.c.denominator * self.d.denominator)
        ia = self.a.numerator * (den // self.a.denominator)
        ib = self.b.numerator * (den // self.b.denominator)
        ic = self.c.numerator * (den // self.c.denominator)
        id_ = self.d.numerator * (den // self.d.denominator)
        k = 32
        while True:
            lo = ia << k
            hi = lo
            for coef, m in ((ib, 2), (ic, 3), (id_, 6)):
                if coef == 0:
                    continue
                slo = _sqrt_lo(m, k)
                if coef > 0:
                    lo += coef * slo
                    hi += coef * (slo + 1)
                else:
                    lo += coef * (slo + 1)
                    hi += coef * slo
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            k *= 2

    def __lt__(self, other) -> bool:
        return (self - Scalar.coerce(other)).sign() < 0

    def __le__(self, other) -> bool:
        return (self - Scalar.coerce(other)).sign() <= 0

    def __gt__(self, other) -> bool:
        return (self - Scalar.coerce(other)).sign() > 0

    def __ge__(self, other) -> bool:
        return (self - Scalar.coerce(other)).sign() >= 0

    def __abs__(self) -> "Scalar":
        return -self if self.sign() < 0 else self

    # -- numeric views -----------------------------------------------

    def interval(self, k: int) -> tuple[Fraction, Fraction]:
        """Enclosing rational interval using sqrt bounds at 2^-k."""
        lo = self.a
        hi = self.a
        for coef, m in ((self.b, 2), (self.c, 3), (self.d, 6)):
            if coef == 0:
                continue
            slo = Fraction(_sqrt_lo(m, k), 1 << k)
            shi = slo + Fraction(1, 1 << k)
            if coef > 0:
                lo += coef * slo
                hi += coef * shi
            else:
                lo += coef * shi
                hi += coef * slo
        return lo, hi

    def approx(self, precision: int = 53) -> Approximation:
        """Float approximation with an exact bound on the total error.

        The bound covers both the sqrt truncation at `precision + 8`
        dyadic bits and the final rounding to float.
        """
        if precision < 32:
            raise ValueError("precision must be at least 32 bits")
        if self.is_zero():
            return Approximation(0.0, Fraction(0))
        lo, hi = self.interval(precision + 8)
        mid = (lo + hi) / 2
        value = float(mid)
        bound = (hi - lo) / 2 + abs(Fraction(value) - mid)
        return Approximation(value, bound)

    def __float__(self) -> float:
        # fast, non-rigorous view; rigorous callers use approx()/sign()
        return (float(self.a) + float(self.b) * _FLOAT_SQRT2
                + float(self.c) * _FLOAT_SQRT3 + float(self.d) * _FLOAT_SQRT6)

    def floor(self) -> int:
        """Largest integer n with n <= value."""
        if self.is_rational():
            return math.floor(self.a)
        lo, hi = self.interval(64)
        n = math.floor(lo)
        # interval is tighter than 2^-60; at most one correction needed
        while (self - (n + 1)).sign() >= 0:
            n += 1
        while (self - n).sign() < 0:
            n -= 1
        return n

    # -- display -----------------------------------------------------

    def __repr__(self) -> str:
        return f"Scalar({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"

    def __str__(self) -> str:
        parts = []
        for coef, sym in ((self.a, ""), (self.b, "√2"), (self.c, "√3"),
                          (self.d, "√6")):
            if coef == 0:
                continue
            parts.append(f"{coef}{sym}" if sym else f"{coef}")
        return " + ".join(parts).replace("+ -", "- ") if parts else "0"


ZERO = Scalar(0)
ONE = Scalar(1)
SQRT2 = Scalar(0, 1)
SQRT3 = Scalar(0, 0, 1)
SQRT6 = Scalar(0, 0, 0, 1)


def rat(p: int, q: int = 1) -> Scalar:
    """Shorthand for a rational Scalar p/q."""
    return Scalar(Fraction(p, q))
