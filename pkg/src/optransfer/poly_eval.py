"""Orthonormal and monic polynomial values at a single point.

All values are carried as :class:`ScaledReal`; outside the essential support
``p_n(x0)`` grows like ``lambda_plus**n`` and overflows doubles long before the
index ranges we care about.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator, List

from .coeff_model import CoefficientSequence
from .errors import Inconclusive
from .scaled import ScaledReal

# mass_at detector settings
CONVERGE_RUN = 10
DIVERGE_WINDOW = 50


@dataclass(frozen=True)
class EvalTrace:
    x0: float
    p: List[ScaledReal]
    kernel: List[ScaledReal]
    n_max: int

    def p_float(self, n: int) -> float:
        return self.p[n].to_real()


def p0(seq: CoefficientSequence) -> float:
    return 1.0 / math.sqrt(seq.total_mass)


def iter_orthonormal(seq: CoefficientSequence, x0: float) -> Iterator[ScaledReal]:
    """Yield ``p_0(x0), p_1(x0), ...`` without end."""
    prev = ScaledReal.zero()
    cur = ScaledReal.from_real(p0(seq))
    n = 0
    yield cur
    while True:
        a_next = seq.a(n + 1)
        nxt = (cur * (x0 - seq.b(n + 1)) - prev * (seq.a(n) if n else 0.0)) / a_next
        prev, cur = cur, nxt
        n += 1
        yield cur


def eval_orthonormal(seq: CoefficientSequence, x0: float, N: int) -> EvalTrace:
    """``p_0..p_N`` at ``x0`` and the kernel diagonal ``K_n = sum_{j<=n} p_j^2``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    p, kernel = [], []
    k = ScaledReal.zero()
    for n, pn in enumerate(iter_orthonormal(seq, x0)):
        if n > N:
            break
        k = k + pn * pn
        p.append(pn)
        kernel.append(k)
    return EvalTrace(x0=float(x0), p=p, kernel=kernel, n_max=N)


def eval_monic(seq: CoefficientSequence, x0: float, N: int) -> List[ScaledReal]:
    """``P_0..P_N`` from ``P_{n+1} = (x0 - b_{n+1}) P_n - a_n^2 P_{n-1}``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    out = [ScaledReal.one()]
    prev = ScaledReal.zero()
    for n in range(N):
        an = seq.a(n) if n else 0.0
        nxt = out[-1] * (x0 - seq.b(n + 1)) - prev * (an * an)
        prev = out[-1]
        out.append(nxt)
    return out


def kappa(seq: CoefficientSequence, n: int) -> ScaledReal:
    """Leading coefficient of ``p_n``: ``kappa_0 / prod_{j<=n} a_j``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    k = ScaledReal.from_real(p0(seq))
    for j in range(1, n + 1):
        k = k / seq.a(j)
    return k


def kappas(seq: CoefficientSequence, N: int) -> List[ScaledReal]:
    out = [ScaledReal.from_real(p0(seq))]
    for j in range(1, N + 1):
        out.append(out[-1] / seq.a(j))
    return out


def series_verdict(p_iter, tol: float, N_max: int):
    """Classify ``sum p_n^2`` as convergent or divergent.

    Returns ``("converged", n, K_n)`` or ``("diverged", n, K_n)``; raises
    :class:`Inconclusive` when ``N_max`` terms decide neither.

    Convergence: ``p_n^2 / K_n < tol`` for ``CONVERGE_RUN`` consecutive terms.
    Divergence: the slope of ``ln K_n`` over the last ``DIVERGE_WINDOW`` terms
    exceeds ``tol`` and is steady, i.e. the second half of the window rises at
    least 0.9 times as fast as the first half.  A convergent series fails the
    steadiness test because its log-increments shrink.
    """
    k = ScaledReal.zero()
    lnk = []
    run = 0
    half = DIVERGE_WINDOW // 2
    for n, pn in enumerate(p_iter):
        if n > N_max:
            break
        sq = pn * pn
        k = k + sq
        lnk.append(k.ln_mag)
        if n > 0 and (sq / k).to_real() < tol:
            run += 1
            if run >= CONVERGE_RUN:
                return "converged", n, k
        else:
            run = 0
        if n >= DIVERGE_WINDOW:
            s_old = (lnk[n - half] - lnk[n - DIVERGE_WINDOW]) / half
            s_new = (lnk[n] - lnk[n - half]) / half
            if s_new > tol and s_old > 0 and s_new >= 0.9 * s_old:
                return "diverged", n, k
    raise Inconclusive(f"sum of p_n^2 undecided after {N_max} terms", N_max=N_max)


def mass_at(seq: CoefficientSequence, x0: float, tol: float = 1e-10,
            N_max: int = 10_000) -> float:
    """Point mass of the measure at ``x0`` via ``(sum_n p_n(x0)^2)^{-1}``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    verdict, _, k = series_verdict(iter_orthonormal(seq, x0), tol, N_max)
    if verdict == "diverged":
        return 0.0
    return min((1.0 / k).to_real(), seq.total_mass)


def write_trace_csv(trace: EvalTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "sign_pn", "ln_abs_pn", "ln_kernel"])
        for n, (pn, kn) in enumerate(zip(trace.p, trace.kernel)):
            w.writerow([n, pn.sign, repr(pn.ln_mag), repr(kn.ln_mag)])
