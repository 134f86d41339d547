"""Sequences shared by several test modules."""
import math

from optransfer.coeff_model import CoefficientSequence, NevaiLimit, from_arrays


def short_prefix():
    return from_arrays([0.6, 0.45, 0.55, 0.52], [0.1, -0.2, 0.05, 0.0], (0.5, 0.0))


def geometric_prefix():
    ns = range(1, 61)
    return from_arrays([0.5 + 0.3 * 0.7 ** n for n in ns],
                       [0.2 * (-0.5) ** n for n in ns], (0.5, 0.0))


def alternating_prefix():
    # (-1)^n / n^2 corrections: summable variation, sign flips every step
    ns = range(1, 201)
    return from_arrays([0.5 + 0.2 * (-1) ** n / n ** 2 for n in ns],
                       [0.15 * math.cos(n) / n ** 2 for n in ns], (0.5, 0.0))


def algebraic_tail():
    # bounded variation, but never exactly constant
    return CoefficientSequence(
        a_prefix=(), b_prefix=(), limit=NevaiLimit(0.5, 0.0), total_mass=1.0,
        a_tail=lambda n: 0.5 + 0.25 / n ** 2, b_tail=lambda n: 0.1 / n ** 2)


BV_FAMILY = {
    "short_prefix": short_prefix,
    "geometric_prefix": geometric_prefix,
    "alternating_prefix": alternating_prefix,
    "algebraic_tail": algebraic_tail,
}

BV_X0 = 1.5


def rel_err(x, y):
    return abs(x - y) / max(abs(y), 1e-300)


def cheb_closed_form(n, x0=1.25):
    """``p_n(x0)`` for the Chebyshev weight with ``x0 = cosh(theta)``."""
    if n == 0:
        return 1.0
    th = math.acosh(x0)
    return math.sqrt(2.0) * math.cosh(n * th)
