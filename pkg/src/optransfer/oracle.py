"""Brute-force recurrence coefficients of an explicit discrete measure.

Used as the independent check of the perturbation formulas: discretize a
classical weight with a Gauss rule, append atoms, and run the Stieltjes
procedure with exactly rounded inner products (``math.fsum``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .coeff_model import legendre
from .errors import DomainError, DuplicateNode, ExactnessBudgetExceeded


@dataclass(frozen=True)
class DiscreteMeasure:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise ValueError("nodes and weights differ in length")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if len(np.unique(self.nodes)) != len(self.nodes):
            raise DuplicateNode("nodes must be pairwise distinct")

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def __len__(self):
        return len(self.nodes)


def gauss_discretization(family: str, M: int) -> DiscreteMeasure:
    """``M``-point Gauss rule for the Chebyshev (mass 1) or Legendre (mass 2) weight."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if family == "chebyshev":
        k = np.arange(1, M + 1)
        nodes = np.cos((2 * k - 1) * np.pi / (2 * M))
        # cos(pi/2) is 6e-17, not 0
        if M % 2:
            nodes[M // 2] = 0.0
        return DiscreteMeasure(nodes, np.full(M, 1.0 / M))
    if family == "legendre":
        seq = legendre()
        if M == 1:
            return DiscreteMeasure(np.array([0.0]), np.array([seq.total_mass]))
        diag = np.zeros(M)
        off = np.array([seq.a(n) for n in range(1, M)])
        vals, vecs = eigh_tridiagonal(diag, off)
        return DiscreteMeasure(vals, seq.total_mass * vecs[0, :] ** 2)
    raise DomainError(f"unknown family {family!r}", family=family)


def with_atoms(m: DiscreteMeasure, pms: Sequence) -> DiscreteMeasure:
    if not pms:
        return m
    xs = np.array([pm.x0 for pm in pms], dtype=float)
    gs = np.array([pm.gamma for pm in pms], dtype=float)
    if np.any(np.isin(xs, m.nodes)) or len(np.unique(xs)) != len(xs):
        raise DuplicateNode("atom coincides with an existing node")
    return DiscreteMeasure(np.concatenate([m.nodes, xs]), np.concatenate([m.weights, gs]))


def _inner(w, f, g) -> float:
    return math.fsum(w * f * g)


def stieltjes(m: DiscreteMeasure, N: int):
    """``a_1..a_N`` and ``b_1..b_N`` of the discrete measure ``m``.

    Each new polynomial is re-orthogonalized once against all of its
    predecessors.  Against the two nearest ones only, the values at atoms far
    outside the support drift: the recurrence amplifies their rounding error
    by the growing eigenvalue at every step.
    """
    if N > len(m) // 2 - 1:
        raise ExactnessBudgetExceeded(
            f"N = {N} exceeds the budget {len(m) // 2 - 1} for {len(m)} nodes",
            N=N, nodes=len(m))
    x, w = m.nodes, m.weights
    basis = [np.full_like(x, 1.0 / math.sqrt(m.total_mass))]
    p_prev = np.zeros_like(x)
    a_prev = 0.0
    a, b = [], []
    for _ in range(N):
        p = basis[-1]
        bn = _inner(w, x * p, p)
        q = (x - bn) * p - a_prev * p_prev
        for v in basis:
            q = q - _inner(w, q, v) * v
        an = math.sqrt(_inner(w, q, q))
        a.append(an)
        b.append(bn)
        p_prev, a_prev = p, an
        basis.append(q / an)
    return a, b
