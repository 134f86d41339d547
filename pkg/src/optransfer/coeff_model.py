"""Recurrence-coefficient sequences.

A sequence is a finite prefix of stored values followed by a tail rule, so
``a(n)`` and ``b(n)`` can be queried for arbitrarily large ``n``.  Indices
start at 1: ``b(1)`` is the first diagonal entry of the Jacobi matrix and
``a(1)`` the first off-diagonal entry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .errors import NonpositiveCoefficient, NonpositiveMass, DomainError


@dataclass(frozen=True)
class NevaiLimit:
    """Limits ``a_n -> a`` and ``b_n -> b``."""
    a: float
    b: float

    def __post_init__(self):
        if not self.a > 0:
            raise NonpositiveCoefficient(f"limit a must be positive, got {self.a}", a=self.a)


@dataclass(frozen=True)
class CoefficientSequence:
    """Jacobi coefficients ``(a_n, b_n)_{n>=1}`` with total mass of the measure.

    Values inside the prefix are read back verbatim.  Beyond the prefix the
    optional tail callables are used; without them the sequence is constant
    and equal to ``limit``.
    """
    a_prefix: tuple
    b_prefix: tuple
    limit: NevaiLimit
    total_mass: float = 1.0
    a_tail: Optional[Callable[[int], float]] = field(default=None, compare=False)
    b_tail: Optional[Callable[[int], float]] = field(default=None, compare=False)
    family: str = "custom"

    def __post_init__(self):
        if not self.total_mass > 0:
            raise NonpositiveMass(f"total_mass must be positive, got {self.total_mass}",
                                  total_mass=self.total_mass)
        for i, v in enumerate(self.a_prefix, start=1):
            if not v > 0:
                raise NonpositiveCoefficient(f"a({i}) = {v} is not positive", n=i, value=v)

    def a(self, n: int) -> float:
        if n < 1:
            raise IndexError(f"a(n) is defined for n >= 1, got {n}")
        if n <= len(self.a_prefix):
            return self.a_prefix[n - 1]
        if self.a_tail is not None:
            return self.a_tail(n)
        return self.limit.a

    def b(self, n: int) -> float:
        if n < 1:
            raise IndexError(f"b(n) is defined for n >= 1, got {n}")
        if n <= len(self.b_prefix):
            return self.b_prefix[n - 1]
        if self.b_tail is not None:
            return self.b_tail(n)
        return self.limit.b

    @property
    def prefix_length(self) -> int:
        return max(len(self.a_prefix), len(self.b_prefix))

    def arrays(self, N: int):
        """Return lists ``[a(1..N)]`` and ``[b(1..N)]``."""
        return [self.a(n) for n in range(1, N + 1)], [self.b(n) for n in range(1, N + 1)]

    def to_spec(self) -> dict:
        """JSON-ready spec.  Custom sequences serialize their prefix only."""
        if self.family in ("chebyshev", "legendre"):
            return {"family": self.family}
        return {
            "family": "custom",
            "a": list(self.a_prefix),
            "b": list(self.b_prefix),
            "limit": {"a": self.limit.a, "b": self.limit.b},
            "total_mass": self.total_mass,
        }


def chebyshev() -> CoefficientSequence:
    """First-kind Chebyshev weight ``1/(pi sqrt(1-x^2))`` on [-1, 1], mass 1."""
    return CoefficientSequence(
        a_prefix=(1.0 / math.sqrt(2.0),),
        b_prefix=(),
        limit=NevaiLimit(0.5, 0.0),
        total_mass=1.0,
        family="chebyshev",
    )


def _legendre_a(n: int) -> float:
    return n / math.sqrt(4.0 * n * n - 1.0)


def legendre() -> CoefficientSequence:
    """Uniform weight on [-1, 1], total mass 2."""
    return CoefficientSequence(
        a_prefix=(),
        b_prefix=(),
        limit=NevaiLimit(0.5, 0.0),
        total_mass=2.0,
        a_tail=_legendre_a,
        b_tail=None,
        family="legendre",
    )


def from_arrays(a: Sequence[float], b: Sequence[float], limit, total_mass: float = 1.0,
                ) -> CoefficientSequence:
    """Finite prefix followed by the constant limit tail.

    ``limit`` may be a :class:`NevaiLimit` or an ``(a, b)`` pair.
    """
    if not isinstance(limit, NevaiLimit):
        limit = NevaiLimit(float(limit[0]), float(limit[1]))
    return CoefficientSequence(
        a_prefix=tuple(float(v) for v in a),
        b_prefix=tuple(float(v) for v in b),
        limit=limit,
        total_mass=float(total_mass),
    )


def from_spec(spec: dict) -> CoefficientSequence:
    """Build a sequence from its JSON spec (see :meth:`CoefficientSequence.to_spec`)."""
    family = spec.get("family", "custom")
    if family == "chebyshev":
        return chebyshev()
    if family == "legendre":
        return legendre()
    if family != "custom":
        raise DomainError(f"unknown family {family!r}", family=family)
    try:
        lim = spec["limit"]
        return from_arrays(spec.get("a", []), spec.get("b", []),
                           NevaiLimit(float(lim["a"]), float(lim["b"])),
                           float(spec.get("total_mass", 1.0)))
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed custom sequence spec: {exc}") from exc


def total_variation(seq: CoefficientSequence, N: int):
    """``(sum_{n=1}^N |a(n+1)-a(n)|, sum_{n=1}^N |b(n+1)-b(n)|)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    a, b = seq.arrays(N + 1)
    tv_a = math.fsum(abs(a[i + 1] - a[i]) for i in range(N))
    tv_b = math.fsum(abs(b[i + 1] - b[i]) for i in range(N))
    return tv_a, tv_b


def essential_support(limit: NevaiLimit):
    return (limit.b - 2.0 * limit.a, limit.b + 2.0 * limit.a)


def is_outside_support(limit: NevaiLimit, x0: float) -> bool:
    lo, hi = essential_support(limit)
    return x0 < lo or x0 > hi
