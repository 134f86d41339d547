"""Adding point masses outside the essential support.

For ``mu~ = mu + gamma delta_{x0}`` with ``D_n = 1 + gamma K_n(x0, x0)``
(``D_{-1} = 1``):

* ``t_n = D_{n-1} / D_n`` and ``a~_n = a_n sqrt(t_{n-1} / t_n)``,
* ``h_n = gamma a_{n+1} p_{n+1}(x0) p_n(x0) / D_n`` (``h_{-1} = 0``) and
  ``b~_{n+1} = b_{n+1} - h_{n-1} + h_n``.

``K_n`` and ``p_n`` grow geometrically, so ``t_n`` and ``h_n`` are formed as
ScaledReal ratios and converted to floats only once they are O(1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence

from .coeff_model import (CoefficientSequence, essential_support, is_outside_support,
                          total_variation)
from .errors import DuplicatePoint, Inconclusive, OutsideSupportViolation
from .poly_eval import eval_orthonormal, iter_orthonormal, kappas, series_verdict
from .scaled import ScaledReal
from .transfer import limit_eigen

ATOM_TOL = 1e-10


@dataclass(frozen=True)
class PointMassSpec:
    x0: float
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @classmethod
    def from_dict(cls, d) -> "PointMassSpec":
        return cls(float(d["x0"]), float(d["gamma"]))


@dataclass
class PerturbationResult:
    seq_tilde: CoefficientSequence
    pm: PointMassSpec
    t: List[float]
    h: List[float]
    a_tilde: List[float]
    b_tilde: List[float]
    atom_in_base: bool = False
    limits: dict = field(default_factory=dict)


def _require_outside(seq: CoefficientSequence, x0: float) -> None:
    if not is_outside_support(seq.limit, x0):
        lo, hi = essential_support(seq.limit)
        raise OutsideSupportViolation(f"x0 = {x0} lies in [{lo}, {hi}]", x0=x0,
                                      support=[lo, hi])


def is_atom(seq: CoefficientSequence, x0: float, tol: float = ATOM_TOL,
            N_max: int = 10_000) -> bool:
    try:
        verdict, _, _ = series_verdict(iter_orthonormal(seq, x0), tol, N_max)
    except Inconclusive:
        return False
    return verdict == "converged"


def stable_values(seq: CoefficientSequence, x0: float, N: int):
    """``p_0..p_N`` at ``x0`` and whether ``x0`` is an atom of ``seq``.

    At an atom the exact ``p_n(x0)`` is the decaying solution.  Forward
    recurrence tracks it until rounding noise in the growing mode overtakes
    it, after which the computed values grow again.  Past the minimum of
    ``|p_n|`` the exact values are below that noise level, so they are set to
    zero.
    """
    trace = eval_orthonormal(seq, x0, N)
    p = list(trace.p)
    atom = is_atom(seq, x0)
    if atom:
        i_min = min(range(len(p)), key=lambda i: (p[i].ln_mag, i))
        for i in range(i_min + 1, len(p)):
            p[i] = ScaledReal.zero()
    return p, atom


def perturb(seq: CoefficientSequence, pm: PointMassSpec, N: int) -> PerturbationResult:
    """Recurrence coefficients of ``seq``'s measure plus ``pm.gamma`` at ``pm.x0``.

    The returned ``seq_tilde`` stores ``a~_1..a~_N``, ``b~_1..b~_N``.  Beyond
    ``N`` it falls back to ``seq``'s own coefficients.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    _require_outside(seq, pm.x0)
    g = pm.gamma
    p, atom = stable_values(seq, pm.x0, N + 1)

    one = ScaledReal.one()
    d = []  # D_n = 1 + gamma K_n
    k = ScaledReal.zero()
    for pn in p:
        k = k + pn * pn
        d.append(one + k * g)

    # t_n for n = 0..N, with D_{-1} = 1
    t = [(one / d[0]).to_real()] + [(d[n - 1] / d[n]).to_real() for n in range(1, N + 1)]
    # h_n for n = 0..N-1; uses a_{n+1} and p_{n+1}
    h = [(p[n + 1] * p[n] * (g * seq.a(n + 1)) / d[n]).to_real() for n in range(N)]

    a_t = [seq.a(n) * math.sqrt(t[n - 1] / t[n]) for n in range(1, N + 1)]
    b_t = [seq.b(n + 1) - (h[n - 1] if n else 0.0) + h[n] for n in range(N)]

    seq_t = CoefficientSequence(
        a_prefix=tuple(a_t), b_prefix=tuple(b_t), limit=seq.limit,
        total_mass=seq.total_mass + g, a_tail=seq.a, b_tail=seq.b,
    )
    res = PerturbationResult(seq_tilde=seq_t, pm=pm, t=t, h=h, a_tilde=a_t, b_tilde=b_t,
                             atom_in_base=atom)
    res.limits = expected_limits(seq, pm, atom)
    return res


def expected_limits(seq: CoefficientSequence, pm: PointMassSpec, atom: bool) -> dict:
    """Limits of ``t_n`` and ``h_n``.

    A new atom gives ``1/lambda_plus^2`` and ``a (lambda_plus - 1/lambda_plus)``;
    re-weighting an existing atom gives 1 and 0.
    """
    if atom:
        return {"t_limit": 1.0, "h_limit": 0.0}
    lp, _ = limit_eigen(seq.limit, pm.x0)
    return {"t_limit": 1.0 / (lp * lp), "h_limit": seq.limit.a * (lp - 1.0 / lp)}


def kernel_diag(seq: CoefficientSequence, x0: float, N: int) -> List[ScaledReal]:
    return eval_orthonormal(seq, x0, N).kernel


def kappa_ratio_sq(seq: CoefficientSequence, pm: PointMassSpec, N: int) -> List[ScaledReal]:
    """``(kappa_n / kappa~_n)^2 = D_n / D_{n-1}`` for ``n = 0..N``."""
    kern = kernel_diag(seq, pm.x0, N)
    one = ScaledReal.one()
    d = [one + kn * pm.gamma for kn in kern]
    return [d[0]] + [d[n] / d[n - 1] for n in range(1, N + 1)]


def perturb_monic_at(seq: CoefficientSequence, pm: PointMassSpec, x: float,
                     N: int) -> List[ScaledReal]:
    """``P~_n(x)`` for ``n = 0..N`` from the closed-form monic relation.

    ``P~_n(x) = (kappa_n/kappa~_n)^2 [P_n(x) - gamma P_n(x0) K_n(x, x0) / D_n]``.

    Written as it stands the bracket cancels catastrophically once
    ``gamma K_n`` is large (at ``x = x0`` the relative error grows like
    ``eps * gamma K_n``).  Multiplying through by ``D_n`` gives

    ``P_n(x) + gamma / kappa_n * sum_j p_j(x0) (p_j(x0) p_n(x) - p_j(x) p_n(x0))``

    whose ``j = n`` term vanishes identically, so the sum is accumulated term
    by term instead.  This costs ``O(N^2)``.
    """
    _require_outside(seq, pm.x0)
    px = eval_orthonormal(seq, x, N).p
    p_at, _ = stable_values(seq, pm.x0, N)
    ks = kappas(seq, N)
    one = ScaledReal.one()
    out = []
    k_diag = ScaledReal.zero()
    d_prev = one
    for n in range(N + 1):
        k_diag = k_diag + p_at[n] * p_at[n]
        d = one + k_diag * pm.gamma
        acc = ScaledReal.zero()
        for j in range(n):
            acc = acc + p_at[j] * (p_at[j] * px[n] - px[j] * p_at[n])
        bracket = px[n] / ks[n] + acc * pm.gamma / ks[n]
        out.append(bracket / d_prev)
        d_prev = d
    return out


def monic_at_atom(seq: CoefficientSequence, pm: PointMassSpec, N: int) -> List[ScaledReal]:
    """``P~_n(x0) = (kappa_n/kappa~_n)^2 P_n(x0) / D_n``, which simplifies to ``P_n(x0) / D_{n-1}``."""
    p_at, _ = stable_values(seq, pm.x0, N)
    ks = kappas(seq, N)
    one = ScaledReal.one()
    out = []
    k = ScaledReal.zero()
    d_prev = one
    for n in range(N + 1):
        k = k + p_at[n] * p_at[n]
        d = one + k * pm.gamma
        out.append((d / d_prev) * (p_at[n] / ks[n]) / d)
        d_prev = d
    return out


def perturbed_orthonormal_at_atom(seq: CoefficientSequence, pm: PointMassSpec,
                                  N: int) -> List[ScaledReal]:
    """``p~_n(x0) = p_n(x0) / sqrt(D_n D_{n-1})``.

    No cancellation occurs, so this is an accurate reference for the
    decaying perturbed polynomials at the new atom at any ``n``.
    """
    p_at, _ = stable_values(seq, pm.x0, N)
    one = ScaledReal.one()
    out = []
    k = ScaledReal.zero()
    d_prev = one
    for n in range(N + 1):
        k = k + p_at[n] * p_at[n]
        d = one + k * pm.gamma
        out.append(p_at[n] / (d * d_prev).sqrt())
        d_prev = d
    return out


def add_points(seq: CoefficientSequence, pms: Sequence[PointMassSpec],
               N: int) -> CoefficientSequence:
    """Add the atoms one after another; the order does not matter mathematically."""
    seen = []
    for pm in pms:
        _require_outside(seq, pm.x0)
        if pm.x0 in seen:
            raise DuplicatePoint(f"x0 = {pm.x0} listed twice", x0=pm.x0)
        seen.append(pm.x0)
    cur = seq
    for pm in pms:
        if is_atom(cur, pm.x0):
            raise DuplicatePoint(f"x0 = {pm.x0} is already an atom", x0=pm.x0)
        cur = perturb(cur, pm, N).seq_tilde
    return cur


@dataclass
class LimitReport:
    N: int
    conditions: dict
    limit_deviation_a: float
    limit_deviation_b: float
    tail_tv: float
    steps: list
    passed: dict

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "conditions": self.conditions,
            "limit_deviation_a": self.limit_deviation_a,
            "limit_deviation_b": self.limit_deviation_b,
            "tail_tv": self.tail_tv,
            "steps": self.steps,
            "passed": self.passed,
            "ok": self.ok,
        }


def verify_limits(seq: CoefficientSequence, pms: Sequence[PointMassSpec], N: int = 2000,
                  tol_limit: float = 1e-6, tol_tv: float = 1e-6,
                  tol_th: float = 1e-6) -> LimitReport:
    """Check that adding ``pms`` keeps the coefficients convergent and of bounded variation.

    The input is first checked numerically: ``|a(N) - a| + |b(N) - b|`` must
    be below ``tol_limit`` and the variation accumulated between ``N/2`` and
    ``N`` below ``tol_tv``.  Each atom is then added in turn and its ``t_N``
    and ``h_{N-1}`` are compared with their limits.
    """
    lim = seq.limit
    half = max(1, N // 2)
    tv_full = total_variation(seq, N)
    tv_half = total_variation(seq, half)
    cond = {
        "limit_gap": abs(seq.a(N) - lim.a) + abs(seq.b(N) - lim.b),
        "tail_tv": (tv_full[0] - tv_half[0]) + (tv_full[1] - tv_half[1]),
        "tv": tv_full[0] + tv_full[1],
    }
    cond["ok"] = cond["limit_gap"] < tol_limit and cond["tail_tv"] < tol_tv

    cur = seq
    steps = []
    for pm in pms:
        res = perturb(cur, pm, N)
        lims = res.limits
        steps.append({
            "x0": pm.x0, "gamma": pm.gamma, "atom_in_base": res.atom_in_base,
            "t_N": res.t[N], "h_N": res.h[N - 1],
            "t_limit": lims["t_limit"], "h_limit": lims["h_limit"],
            "t_residual": abs(res.t[N] - lims["t_limit"]),
            "h_residual": abs(res.h[N - 1] - lims["h_limit"]),
        })
        cur = res.seq_tilde

    a_t = [cur.a(n) for n in range(half, N + 1)]
    b_t = [cur.b(n) for n in range(half, N + 1)]
    dev_a = abs(a_t[-1] - lim.a)
    dev_b = abs(b_t[-1] - lim.b)
    tail = math.fsum(abs(a_t[i + 1] - a_t[i]) + abs(b_t[i + 1] - b_t[i])
                     for i in range(len(a_t) - 1))
    passed = {
        "conditions": cond["ok"],
        "limits": dev_a + dev_b < tol_limit,
        "tail_tv": tail < tol_tv,
        "t_h_limits": all(s["t_residual"] < tol_th and s["h_residual"] < tol_th
                          for s in steps),
    }
    return LimitReport(N=N, conditions=cond, limit_deviation_a=dev_a,
                       limit_deviation_b=dev_b, tail_tv=tail, steps=steps, passed=passed)
