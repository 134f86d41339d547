"""Overflow-safe real scalar.

``ScaledReal`` exposes a sign and the natural log of the magnitude.  Internally
the value is held as a float mantissa with ``0.5 <= |m| < 1`` and an integer
binary exponent, which keeps conversions exact and every arithmetic operation
within one rounding of the float result it replaces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class ScaledReal:
    mant: float = 0.0
    exp: int = 0

    def __post_init__(self):
        if not math.isfinite(self.mant):
            raise ValueError(f"non-finite mantissa {self.mant}")

    # construction -----------------------------------------------------------
    @staticmethod
    def _norm(m: float, e: int) -> "ScaledReal":
        if m == 0.0:
            return _ZERO
        fm, fe = math.frexp(m)
        return ScaledReal(fm, e + fe)

    @classmethod
    def from_real(cls, x: float) -> "ScaledReal":
        return cls._norm(float(x), 0)

    @classmethod
    def from_log(cls, sign: int, ln_mag: float) -> "ScaledReal":
        """Value ``sign * exp(ln_mag)``."""
        if sign == 0:
            return _ZERO
        e2 = ln_mag / _LN2
        k = math.floor(e2)
        m = math.copysign(2.0 ** (e2 - k), sign)
        return cls._norm(m, int(k))

    @classmethod
    def zero(cls) -> "ScaledReal":
        return _ZERO

    @classmethod
    def one(cls) -> "ScaledReal":
        return _ONE

    # views ------------------------------------------------------------------
    @property
    def sign(self) -> int:
        return (self.mant > 0) - (self.mant < 0)

    @property
    def ln_mag(self) -> float:
        """``ln|x|``; ``-inf`` for zero."""
        if self.mant == 0.0:
            return -math.inf
        return math.log(abs(self.mant)) + self.exp * _LN2

    def to_real(self) -> float:
        """Plain float; raises ``OverflowError`` when out of range."""
        return math.ldexp(self.mant, self.exp)

    def __float__(self):
        return self.to_real()

    # arithmetic -------------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "ScaledReal":
        if isinstance(other, ScaledReal):
            return other
        return ScaledReal.from_real(other)

    def __mul__(self, other):
        o = self._coerce(other)
        return self._norm(self.mant * o.mant, self.exp + o.exp)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.mant == 0.0:
            raise ZeroDivisionError("ScaledReal division by zero")
        return self._norm(self.mant / o.mant, self.exp - o.exp)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __add__(self, other):
        o = self._coerce(other)
        if self.mant == 0.0:
            return o
        if o.mant == 0.0:
            return self
        if self.exp >= o.exp:
            hi, lo = self, o
        else:
            hi, lo = o, self
        return self._norm(hi.mant + math.ldexp(lo.mant, lo.exp - hi.exp), hi.exp)

    __radd__ = __add__

    def __neg__(self):
        return ScaledReal(-self.mant, self.exp)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __abs__(self):
        return ScaledReal(abs(self.mant), self.exp)

    def square(self) -> "ScaledReal":
        return self * self

    def sqrt(self) -> "ScaledReal":
        if self.mant < 0:
            raise ValueError("sqrt of negative ScaledReal")
        if self.mant == 0.0:
            return _ZERO
        m, e = self.mant, self.exp
        if e % 2:
            m, e = m * 2.0, e - 1
        return self._norm(math.sqrt(m), e // 2)

    # comparison -------------------------------------------------------------
    def __lt__(self, other):
        return (self - self._coerce(other)).mant < 0

    def __le__(self, other):
        return (self - self._coerce(other)).mant <= 0

    def __gt__(self, other):
        return (self - self._coerce(other)).mant > 0

    def __ge__(self, other):
        return (self - self._coerce(other)).mant >= 0

    def __repr__(self):
        if self.mant == 0.0:
            return "ScaledReal(0)"
        return f"ScaledReal(sign={self.sign:+d}, ln_mag={self.ln_mag!r})"


_ZERO = ScaledReal(0.0, 0)
_ONE = ScaledReal(0.5, 1)


def ratio(num: ScaledReal, den: ScaledReal) -> float:
    """``num/den`` as a float; intended for results known to be O(1)."""
    return (num / den).to_real()


def ssum(values) -> ScaledReal:
    total = _ZERO
    for v in values:
        total = total + v
    return total
