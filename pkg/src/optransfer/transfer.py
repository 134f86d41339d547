"""Step matrices, transfer products and per-step eigen-decomposition.

The step matrix ``A_j(x) = a_j^{-1} [[x - b_j, -1], [a_j^2, 0]]`` maps the
state ``(p_{j-1}, a_{j-1} p_{j-2})`` to ``(p_j, a_j p_{j-1})``.  It has
determinant one, so for ``|x - b_j| > 2 a_j`` its eigenvalues are real with
product one.  ``lambda_plus`` always denotes the eigenvalue of modulus greater
than one; on the left of the support both eigenvalues are negative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coeff_model import CoefficientSequence, NevaiLimit, is_outside_support
from .errors import NeverHyperbolic, NotHyperbolic, OutsideSupportViolation

Mat2 = np.ndarray


def step_matrix(seq: CoefficientSequence, j: int, x0: float) -> Mat2:
    if j < 1:
        raise ValueError("j must be >= 1")
    a, b = seq.a(j), seq.b(j)
    return np.array([[(x0 - b) / a, -1.0 / a], [a, 0.0]])


@dataclass(frozen=True)
class ScaledMat2:
    """``exp(ln_scale) * unit`` with ``max|unit| == 1``.

    ``ln_abs_det`` and ``det_sign`` describe the determinant of the represented
    matrix.  They are accumulated from the triangular factors of a running QR
    decomposition, because for a hyperbolic product the determinant is lost to
    cancellation in ``unit`` after a few dozen steps.
    """
    unit: Mat2
    ln_scale: float
    ln_abs_det: float = 0.0
    det_sign: int = 1

    @property
    def det(self) -> float:
        return self.det_sign * math.exp(self.ln_abs_det)

    def apply(self, vec):
        """Return ``(w, ln_scale)`` with ``M @ vec == exp(ln_scale) * w``."""
        return self.unit @ np.asarray(vec, dtype=float), self.ln_scale

    def to_array(self) -> Mat2:
        return self.unit * math.exp(self.ln_scale)


def iter_transfer(seq: CoefficientSequence, x0: float, n: int):
    """Yield ``T_1, ..., T_n`` as :class:`ScaledMat2`, kept as ``Q_j R_j`` (Givens QR per step)."""
    q = np.eye(2)
    r = np.eye(2)
    ln_r = 0.0
    ln_det = 0.0
    sgn = 1
    for j in range(1, n + 1):
        m = step_matrix(seq, j, x0) @ q
        r11 = math.hypot(m[0, 0], m[1, 0])
        c, s = m[0, 0] / r11, m[1, 0] / r11
        r12 = c * m[0, 1] + s * m[1, 1]
        r22 = -s * m[0, 1] + c * m[1, 1]
        q = np.array([[c, -s], [s, c]])
        r = np.array([[r11, r12], [0.0, r22]]) @ r
        ln_det += math.log(r11) + math.log(abs(r22))
        sgn *= 1 if r22 > 0 else -1
        big = np.max(np.abs(r))
        r /= big
        ln_r += math.log(big)
        prod = q @ r
        pbig = np.max(np.abs(prod))
        yield ScaledMat2(unit=prod / pbig, ln_scale=ln_r + math.log(pbig),
                         ln_abs_det=ln_det, det_sign=sgn)


def transfer_product(seq: CoefficientSequence, x0: float, n: int) -> ScaledMat2:
    """``T_n = A_n ... A_1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    for t in iter_transfer(seq, x0, n):
        pass
    return t


def _eigen_pair(a: float, d: float):
    """Roots of ``a z^2 - d z + a`` ordered (dominant, subdominant)."""
    disc = d * d - 4.0 * a * a
    if not disc > 0:
        raise NotHyperbolic(f"|x - b| = {abs(d)} <= 2a = {2 * a}", a=a, x_minus_b=d)
    s = math.sqrt(disc)
    big = d + math.copysign(s, d)
    return big / (2.0 * a), (2.0 * a) / big, math.copysign(s, d)


def limit_eigen(limit: NevaiLimit, x0: float):
    """Eigenvalues ``(lambda_plus, lambda_minus)`` of the limiting step matrix."""
    lp, lm, _ = _eigen_pair(limit.a, x0 - limit.b)
    return lp, lm


def limit_basis(limit: NevaiLimit, x0: float) -> Mat2:
    """Eigenvector matrix of the limiting step matrix, same normalization as :class:`EigenStep`."""
    lp, lm = limit_eigen(limit, x0)
    return np.array([[1.0, 1.0], [limit.a * lm, limit.a * lp]])


@dataclass(frozen=True)
class EigenStep:
    j: int
    lambda_plus: float
    lambda_minus: float
    G: Mat2
    G_inv: Mat2


def eigen_step(seq: CoefficientSequence, j: int, x0: float) -> EigenStep:
    """``A_j = G D G^{-1}``; eigenvector columns scaled to first component 1.

    The eigenvector of ``lambda`` is ``(1, a_j / lambda)``, and
    ``1/lambda_plus == lambda_minus``, so the second components are written
    down directly.  ``det G = a_j (lambda_plus - lambda_minus)`` equals the
    signed square root of the discriminant.
    """
    a, b = seq.a(j), seq.b(j)
    try:
        lp, lm, det_g = _eigen_pair(a, x0 - b)
    except NotHyperbolic as exc:
        exc.context["j"] = j
        raise
    g = np.array([[1.0, 1.0], [a * lm, a * lp]])
    g_inv = np.array([[a * lp, -1.0], [-a * lm, 1.0]]) / det_g
    return EigenStep(j=j, lambda_plus=lp, lambda_minus=lm, G=g, G_inv=g_inv)


def is_hyperbolic_step(seq: CoefficientSequence, j: int, x0: float) -> bool:
    return abs(x0 - seq.b(j)) > 2.0 * seq.a(j)


def hyperbolic_onset(seq: CoefficientSequence, x0: float, N_max: int = 10_000) -> int:
    """Smallest ``N`` with every step in ``[N, N_max]`` hyperbolic."""
    if not is_outside_support(seq.limit, x0):
        raise OutsideSupportViolation(f"x0 = {x0} lies in the essential support", x0=x0)
    for j in range(N_max, 0, -1):
        if not is_hyperbolic_step(seq, j, x0):
            if j == N_max:
                raise NeverHyperbolic(f"step {N_max} is not hyperbolic at x0 = {x0}",
                                      x0=x0, N_max=N_max)
            return j + 1
    return 1
