"""Special functions and quadrature primitives.

Everything here is pure, stateless and double-precision.  These routines back
closed-form identities elsewhere in the library, so tolerances are fixed
constants rather than knobs: a loose incomplete gamma would silently mask
errors in the detection and outage expressions built on top of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureRule",
    "chebyshev_rule",
    "lambert_w0",
    "reg_gamma_lower",
    "reg_gamma_upper",
]

_NEG_INV_E = -math.exp(-1.0)
_MAX_SERIES_TERMS = 10_000


def _reg_gamma_pq(a: float, x: float) -> tuple[float, float]:
    """Regularized incomplete gamma pair (P(a,x), Q(a,x)) with P + Q = 1.

    Series expansion for x < a + 1, continued fraction otherwise; in each
    regime the smaller of the two is computed directly so both are accurate
    near 0 and near 1.
    """
    if a <= 0.0:
        raise ValueError(f"shape parameter must be positive, got a={a}")
    if x < 0.0:
        raise ValueError(f"argument must be nonnegative, got x={x}")
    if x == 0.0:
        return 0.0, 1.0
    log_prefactor = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        # Lower series: P = x^a e^-x / Gamma(a) * sum_n x^n / (a(a+1)..(a+n))
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(_MAX_SERIES_TERMS):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * 1e-17:
                break
        else:
            raise RuntimeError(f"incomplete gamma series failed for a={a}, x={x}")
        p = math.exp(log_prefactor) * total
        return min(p, 1.0), max(1.0 - p, 0.0)
    # Upper continued fraction (modified Lentz): Q = x^a e^-x / Gamma(a) * CF
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_SERIES_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:
        raise RuntimeError(f"incomplete gamma fraction failed for a={a}, x={x}")
    q = math.exp(log_prefactor) * h
    return max(1.0 - q, 0.0), min(q, 1.0)


def reg_gamma_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a)."""
    return _reg_gamma_pq(a, x)[1]


def reg_gamma_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) = 1 - Q(a, x)."""
    return _reg_gamma_pq(a, x)[0]


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function: w with w * exp(w) = x.

    Defined for x >= -1/e.  Halley iteration from a regime-dependent initial
    guess; the residual |w e^w - x| is driven below 1e-13 * max(1, |x|).
    """
    if x < _NEG_INV_E:
        if x > _NEG_INV_E * (1.0 + 4e-15) - 4e-15:
            x = _NEG_INV_E  # absorb representation noise at the branch point
        else:
            raise ValueError(f"lambert_w0 requires x >= -1/e, got x={x}")
    if x == 0.0:
        return 0.0
    if x == _NEG_INV_E:
        return -1.0
    if x < -0.25:
        # expansion about the branch point
        p = math.sqrt(2.0 * (1.0 + math.e * x))
        w = -1.0 + p - p * p / 3.0 + 11.0 * p ** 3 / 72.0
    elif x < math.e:
        w = x / (1.0 + x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 1e-14 * max(1.0, abs(x)):
            return w
        wp1 = w + 1.0
        # Halley step
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= 1e-16 * (1.0 + abs(w)):
            ew = math.exp(w)
            f = w * ew - x
            break
    if abs(w * math.exp(w) - x) > 1e-13 * max(1.0, abs(x)):
        raise RuntimeError(f"lambert_w0 did not converge for x={x}")
    return w


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Chebyshev rule of the first kind on (-1, 1).

    nodes[m] = cos((2m+1) pi / (2 order)) and weight_factor[m] =
    sqrt(1 - nodes[m]^2); an unweighted integral over (-1, 1) is approximated
    by (pi / order) * sum(weight_factor * f(nodes)).
    """

    order: int
    nodes: np.ndarray
    weight_factor: np.ndarray


def chebyshev_rule(order: int) -> QuadratureRule:
    """Build the Gauss-Chebyshev rule with the given number of nodes."""
    if order < 1:
        raise ValueError(f"quadrature order must be >= 1, got {order}")
    m = np.arange(1, order + 1)
    angles = (2.0 * m - 1.0) * np.pi / (2.0 * order)
    # sin(angle) equals sqrt(1 - cos^2) but keeps full precision near |x|=1
    return QuadratureRule(order=order, nodes=np.cos(angles), weight_factor=np.sin(angles))
