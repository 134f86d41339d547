"""Normalized iteration in the moving eigenbasis and the growth/decay verdict.

For ``n >= E`` write ``T_n (p_0, 0)^T = G_n v(n)`` where
``v(n+1) = D_{n+1} G_{n+1}^{-1} G_n v(n)``, and factor
``v(n) = L_n (u_n v1_E, w_n v2_E)`` with ``L_n = prod_{k=E+1}^n lambda_k^+``.
The iteration is run on ``v(n) / L_n``; that vector stays O(1) when
``p_n(x0)`` grows and shrinks when it decays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from .coeff_model import CoefficientSequence
from .errors import DegenerateStart, NotClassified, NotHyperbolic
from .poly_eval import p0
from .scaled import ScaledReal
from .transfer import eigen_step, hyperbolic_onset, limit_eigen, limit_basis, step_matrix

DEGENERATE_REL = 1e-12
DEFAULT_E_BUFFER = 5


@dataclass
class AsymptoticTrajectory:
    x0: float
    E: int
    v1_E: float
    v2_E: float
    ln_v_scale: float
    n: List[int]
    lnL: List[float]
    L_sign: List[int]
    vt1: List[float]
    vt2: List[float]
    u: List[float]
    w: List[float]
    r: List[float]
    lambda_plus: List[float]
    lambda_minus: List[float]
    v1_degenerate: bool = False
    v2_degenerate: bool = False

    def reconstruct(self, seq: CoefficientSequence, i: int):
        """``(p_n, a_n p_{n-1})`` at list position ``i`` as a pair of ScaledReal."""
        n = self.n[i]
        g = eigen_step(seq, n, self.x0).G
        y = g @ np.array([self.vt1[i], self.vt2[i]])
        scale = ScaledReal.from_log(self.L_sign[i], self.lnL[i] + self.ln_v_scale)
        return scale * float(y[0]), scale * float(y[1])

    def ln_abs_p(self, seq: CoefficientSequence, stop: Optional[int] = None) -> List[float]:
        """``ln|p_n(x0)|`` for the first ``stop`` trajectory entries (all by default)."""
        out = []
        for i in range(len(self.n) if stop is None else stop):
            out.append(self.reconstruct(seq, i)[0].ln_mag)
        return out


def normalized_iteration(seq: CoefficientSequence, x0: float, E: Optional[int] = None,
                         N: int = 2000, start=None) -> AsymptoticTrajectory:
    """Run the normalized recurrence from ``E`` to ``N``.

    ``start`` overrides the state entering step ``E`` (normally
    ``T_{E-1} (p_0, 0)^T``); it exists to build degenerate starts by hand.
    """
    onset = hyperbolic_onset(seq, x0, max(N, 1))
    if E is None:
        E = onset + DEFAULT_E_BUFFER
    if E < onset:
        raise NotHyperbolic(f"E = {E} precedes the hyperbolic onset {onset}", E=E, onset=onset)
    if N <= E:
        raise ValueError(f"N = {N} must exceed E = {E}")

    ln_pre = 0.0
    if start is None:
        state = np.array([p0(seq), 0.0])
        for j in range(1, E):
            state = step_matrix(seq, j, x0) @ state
            big = np.max(np.abs(state))
            state /= big
            ln_pre += math.log(big)
    else:
        state = np.asarray(start, dtype=float)

    st = eigen_step(seq, E, x0)
    v = np.array([st.lambda_plus, st.lambda_minus]) * (st.G_inv @ state)
    norm = float(np.hypot(v[0], v[1]))
    if norm < 1e-300:
        raise DegenerateStart("both start components vanish", E=E)
    v = v / norm
    ln_v_scale = ln_pre + math.log(norm)
    v1, v2 = float(v[0]), float(v[1])
    v1_deg = abs(v1) < DEGENERATE_REL
    v2_deg = abs(v2) < DEGENERATE_REL
    if v1_deg:
        v1 = 0.0
    if v2_deg:
        v2 = 0.0
    vt = np.array([v1, v2])

    traj = AsymptoticTrajectory(
        x0=float(x0), E=E, v1_E=v1, v2_E=v2, ln_v_scale=ln_v_scale,
        n=[], lnL=[], L_sign=[], vt1=[], vt2=[], u=[], w=[], r=[],
        lambda_plus=[], lambda_minus=[], v1_degenerate=v1_deg, v2_degenerate=v2_deg,
    )
    lnL, sgn = 0.0, 1
    prev = st
    for n in range(E, N + 1):
        if n > E:
            cur = eigen_step(seq, n, x0)
            y = cur.G_inv @ (prev.G @ vt)
            vt = np.array([y[0], y[1] * (cur.lambda_minus / cur.lambda_plus)])
            if v1_deg:
                vt[0] = 0.0
            if v2_deg:
                vt[1] = 0.0
            lnL += math.log(abs(cur.lambda_plus))
            sgn *= 1 if cur.lambda_plus > 0 else -1
            prev = cur
        u = vt[0] / v1 if not v1_deg else math.nan
        w = vt[1] / v2 if not v2_deg else math.nan
        traj.n.append(n)
        traj.lnL.append(lnL)
        traj.L_sign.append(sgn)
        traj.vt1.append(float(vt[0]))
        traj.vt2.append(float(vt[1]))
        traj.u.append(float(u))
        traj.w.append(float(w))
        traj.r.append(float(w / u) if (u == u and w == w and u != 0.0) else math.nan)
        traj.lambda_plus.append(prev.lambda_plus)
        traj.lambda_minus.append(prev.lambda_minus)
    return traj


class Verdict(str, Enum):
    POINT_MASS_DECAY = "PointMassDecay"
    REGULAR_GROWTH = "RegularGrowth"
    DEGENERATE_DECAY = "DegenerateDecay"
    DEGENERATE_GROWTH = "DegenerateGrowth"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class Classification:
    verdict: Verdict
    u_infinity: Optional[float] = None
    decay_rate: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "u_infinity": self.u_infinity,
            "decay_rate": self.decay_rate,
            "diagnostics": self.diagnostics,
        }


def _slope(xs, ys) -> float:
    """Least-squares slope."""
    return float(np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)[0])


def classify(traj: AsymptoticTrajectory, window: int = 50, tol: float = 1e-10,
             stability: float = 1e-6) -> Classification:
    """Decide between exponential decay (atom at ``x0``) and regular growth.

    Decay: the normalized magnitude ``|v(n)/L_n|`` falls below ``tol`` (its
    start value is 1).  In floating point it then levels off near the
    rounding floor, because the forward recurrence feeds the growing mode, so
    the rate is fitted on the descent before the crossing.

    Growth: over the last ``window`` entries ``u_n`` varies by at most
    ``stability`` relative to its mean (or its variation is shrinking and
    already below 1e-2), the mean is not below ``tol`` and ``|r_n|`` is small
    or non-increasing.
    """
    if len(traj.n) < 2 * window:
        raise ValueError(f"trajectory has {len(traj.n)} entries, need {2 * window}")
    diag = {"E": traj.E, "window": window, "tol": tol}

    if traj.v2_degenerate:
        tail = traj.u[-window:]
        return Classification(Verdict.DEGENERATE_GROWTH, u_infinity=float(np.mean(tail)),
                              diagnostics=diag)
    if traj.v1_degenerate:
        ln_w = [math.log(abs(x)) for x in traj.vt2 if x != 0.0]
        k = min(len(ln_w), window)
        rate = math.exp(_slope(range(k), ln_w[:k])) if k >= 2 else None
        return Classification(Verdict.DEGENERATE_DECAY, decay_rate=rate, diagnostics=diag)

    mags = [math.hypot(a, b) for a, b in zip(traj.vt1, traj.vt2)]
    cross = next((i for i, m in enumerate(mags) if m < tol), None)
    if cross is not None:
        lo = max(0, cross - window)
        seg = [math.log(m) for m in mags[lo:cross + 1]]
        slope = _slope(range(lo, cross + 1), seg)
        diag.update(floor_index=traj.n[cross], floor_magnitude=float(min(mags)),
                    descent_slope=slope)
        if slope < 0:
            return Classification(Verdict.POINT_MASS_DECAY, decay_rate=math.exp(slope),
                                  diagnostics=diag)
        return Classification(Verdict.INCONCLUSIVE, diagnostics=diag)

    u_last = np.asarray(traj.u[-window:])
    u_prev = np.asarray(traj.u[-2 * window:-window])
    r_last = np.abs(np.asarray(traj.r[-window:]))
    r_prev = np.abs(np.asarray(traj.r[-2 * window:-window]))
    mean = float(np.mean(u_last))
    spread = float(np.max(u_last) - np.min(u_last)) / abs(mean) if mean else math.inf
    tv_last = float(np.sum(np.abs(np.diff(u_last))))
    tv_prev = float(np.sum(np.abs(np.diff(u_prev))))
    r_max = float(np.max(r_last))
    diag.update(u_spread=spread, u_tv_last=tv_last, u_tv_prev=tv_prev,
                r_window_max=r_max, r_prev_max=float(np.max(r_prev)))
    stable = spread <= stability or (tv_last < tv_prev and spread < 1e-2)
    r_ok = r_max <= stability or r_max <= float(np.max(r_prev))
    if stable and abs(mean) > tol and r_ok:
        return Classification(Verdict.REGULAR_GROWTH, u_infinity=mean, diagnostics=diag)
    return Classification(Verdict.INCONCLUSIVE, diagnostics=diag)


@dataclass(frozen=True)
class DecayBound:
    """``|p_n| <= exp(ln_C) * rate**n`` fitted on ``fit_range`` (inclusive)."""
    ln_C: float
    rate: float
    fit_range: tuple
    eps: float

    def ln_bound(self, n: int) -> float:
        return self.ln_C + n * math.log(self.rate)


def fit_decay_bound(traj: AsymptoticTrajectory, seq: CoefficientSequence,
                    cls: Classification, validate_fraction: float = 0.5) -> DecayBound:
    """Fit ``C (|lambda^-| + eps)^n`` on the reliable part of a decaying trajectory.

    The reliable part ends at the floor crossing recorded by :func:`classify`;
    its first ``1 - validate_fraction`` is used for fitting so the remainder
    can serve as held-out data.
    """
    _, lam_minus = limit_eigen(seq.limit, traj.x0)
    stop = len(traj.n)
    if "floor_index" in cls.diagnostics:
        stop = traj.n.index(cls.diagnostics["floor_index"]) + 1
    ln_p = traj.ln_abs_p(seq, stop)
    ns = traj.n[:stop]
    m = max(2, int(round(len(ns) * (1.0 - validate_fraction))))
    kept = [(n, lp) for n, lp in zip(ns[:m], ln_p[:m]) if math.isfinite(lp)]
    slope = _slope([k[0] for k in kept], [k[1] for k in kept])
    base = abs(lam_minus)
    eps = max(0.0, math.exp(slope) - base) + 0.05 * (1.0 - base)
    rate = base + eps
    ln_c = max(lp - n * math.log(rate) for n, lp in kept)
    return DecayBound(ln_C=ln_c, rate=rate, fit_range=(ns[0], ns[m - 1]), eps=eps)


def predict_pn(traj: AsymptoticTrajectory, cls: Classification, seq: CoefficientSequence,
               x0: float, n: int) -> ScaledReal:
    """Leading-order ``p_n(x0)``.

    Growth: ``L_n u_inf g_1 v1_E`` with ``g_1 = 1``.  Decay: the fitted
    magnitude bound ``C (|lambda^-| + eps)^n`` (positive).
    """
    v = cls.verdict
    if v in (Verdict.REGULAR_GROWTH, Verdict.DEGENERATE_GROWTH):
        g1 = limit_basis(seq.limit, x0)[0, 0]
        ln_l, sgn = _lnL_at(traj, seq, x0, n)
        amp = cls.u_infinity * g1 * traj.v1_E
        return ScaledReal.from_log(sgn, ln_l + traj.ln_v_scale) * amp
    if v in (Verdict.POINT_MASS_DECAY, Verdict.DEGENERATE_DECAY):
        bound = fit_decay_bound(traj, seq, cls)
        return ScaledReal.from_log(1, bound.ln_bound(n))
    raise NotClassified(f"cannot predict from verdict {v.value}", verdict=v.value)


def _lnL_at(traj: AsymptoticTrajectory, seq, x0, n):
    if n < traj.E:
        raise ValueError(f"n = {n} precedes E = {traj.E}")
    if n <= traj.n[-1]:
        i = n - traj.E
        return traj.lnL[i], traj.L_sign[i]
    ln_l, sgn = traj.lnL[-1], traj.L_sign[-1]
    for k in range(traj.n[-1] + 1, n + 1):
        lp = eigen_step(seq, k, x0).lambda_plus
        ln_l += math.log(abs(lp))
        sgn *= 1 if lp > 0 else -1
    return ln_l, sgn


def increment_ratios(traj: AsymptoticTrajectory, seq: CoefficientSequence):
    """Empirical constants behind the per-step bounds on ``u`` and ``w``.

    For each ``n`` returns ``(n, ratio_u, ratio_w, dA, num_u, num_w)`` with
    ``ratio_u = |u_{n+1} - u_n| / (dA (|u_n| + |w_n|))`` and
    ``ratio_w = |w_{n+1} - (lambda^-/lambda^+)_{n+1} w_n| / (same)``,
    ``dA = ||A_{n+1} - A_n||_2`` and ``num_*`` the numerators.  Where
    ``dA == 0`` the ratios are ``None``.
    """
    out = []
    x0 = traj.x0
    for i in range(len(traj.n) - 1):
        n = traj.n[i]
        d_a = float(np.linalg.norm(step_matrix(seq, n + 1, x0) - step_matrix(seq, n, x0), 2))
        q = traj.lambda_minus[i + 1] / traj.lambda_plus[i + 1]
        num_u = abs(traj.u[i + 1] - traj.u[i])
        num_w = abs(traj.w[i + 1] - q * traj.w[i])
        den = abs(traj.u[i]) + abs(traj.w[i])
        if d_a == 0.0:
            out.append((n, None, None, 0.0, num_u, num_w))
        else:
            out.append((n, num_u / (d_a * den), num_w / (d_a * den), d_a, num_u, num_w))
    return out


def write_trajectory_csv(traj: AsymptoticTrajectory, path) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "lnL", "u", "w", "r"])
        for row in zip(traj.n, traj.lnL, traj.u, traj.w, traj.r):
            wr.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
