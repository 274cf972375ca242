"""Detection-error-probability analysis for the warden's radiometer.

Phase 1 admits exact closed forms in regularized incomplete gamma functions;
phase 2 mixes two independent gamma aggregates, which we handle with the
moment-matched gamma approximation whose shape/scale are preserved exactly.
The "miss" and "false alarm" components follow the source formulas: p_miss
is the probability that the covert-free statistic still exceeds the
threshold, p_false_alarm that the covert-bearing statistic falls below it;
only their sum (the DEP) is used downstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import PowerAllocation, SystemParams
from .specfun import lambert_w0, reg_gamma_lower, reg_gamma_upper

__all__ = [
    "DepReport",
    "GammaFit",
    "alpha_region_root",
    "beta_region_root",
    "dep_phase1",
    "dep_phase2",
    "gamma_fit_chi",
    "min_dep_phase1",
    "min_dep_phase2",
    "omega1_star",
    "omega2_star",
]

_MONOTONE_GRID = 1000
_BISECT_TOL = 1e-10
_DEGENERATE_REL = 1e-12


@dataclass(frozen=True)
class DepReport:
    p_miss: float
    p_false_alarm: float
    p_dep: float
    omega_used: float


@dataclass(frozen=True)
class GammaFit:
    """Moment-matched gamma shape/scale for a weighted sum of sample energies."""

    kappa: float
    theta: float


def dep_phase1(params: SystemParams, alloc: PowerAllocation, omega1: float) -> DepReport:
    """DEP of the phase-1 radiometer at judgment threshold omega1 (linear).

    The averaged test statistic can never fall below the noise floor, so any
    threshold at or below sigma2 yields a certain miss and no false alarms.
    """
    n, s2 = params.n_samples, params.sigma2
    if omega1 <= s2:
        return DepReport(1.0, 0.0, 1.0, omega1)
    scale = n * (omega1 - s2) / (params.p_s * params.lam["SE"])
    u = scale / alloc.alpha_w
    v = scale
    p_miss = reg_gamma_upper(n, u)
    p_fa = reg_gamma_lower(n, v)
    return DepReport(p_miss, p_fa, p_miss + p_fa, omega1)


def omega1_star(params: SystemParams, alloc: PowerAllocation) -> float:
    """DEP-minimizing phase-1 threshold for the warden (linear units)."""
    aw = alloc.alpha_w
    if aw <= 0.0:
        raise ValueError("omega1_star requires alpha_w > 0")
    if aw >= 1.0:
        factor = 1.0  # limit of alpha ln(1/alpha) / (1 - alpha) as alpha -> 1
    else:
        factor = aw * math.log(1.0 / aw) / (1.0 - aw)
    return factor * params.lam["SE"] * params.p_s + params.sigma2


def min_dep_phase1(params: SystemParams, alloc: PowerAllocation) -> float:
    """Minimum phase-1 DEP, attained at omega1_star.

    Depends only on the sample count and alpha_w; transmit power and the
    eavesdropper link gain cancel out of the optimal operating point.
    """
    return _min_dep1(params.n_samples, alloc.alpha_w)


def _min_dep1(n: int, alpha_w: float) -> float:
    if alpha_w <= 0.0:
        raise ValueError("alpha_w must be positive")
    if alpha_w >= 1.0:
        return 1.0
    ell = math.log(1.0 / alpha_w) / (1.0 - alpha_w)
    return 1.0 - (reg_gamma_upper(n, n * alpha_w * ell) - reg_gamma_upper(n, n * ell))


def gamma_fit_chi(x: float, params: SystemParams) -> GammaFit:
    """Gamma moment match for chi(x) = x P_r tau_RE + P_s tau_SE.

    Shape and scale preserve the exact mean and variance of chi(x):
    kappa * theta = E{chi} and kappa * theta^2 = V{chi}.
    """
    if x < 0.0:
        raise ValueError("coefficient x must be nonnegative")
    n = params.n_samples
    m_s = params.p_s * params.lam["SE"]
    m_r = x * params.relay_power() * params.lam["RE"]
    kappa = n * (m_s + m_r) ** 2 / (m_s * m_s + m_r * m_r)
    theta = (m_s * m_s + m_r * m_r) / (m_s + m_r)
    return GammaFit(kappa=kappa, theta=theta)


def _dep2(params: SystemParams, beta_t: float, omega2: float) -> DepReport:
    n, s2 = params.n_samples, params.sigma2
    if omega2 <= s2:
        return DepReport(1.0, 0.0, 1.0, omega2)
    z = n * (omega2 - s2)
    fit_t = gamma_fit_chi(beta_t, params)
    fit_1 = gamma_fit_chi(1.0, params)
    p_miss = reg_gamma_upper(fit_t.kappa, z / fit_t.theta)
    p_fa = reg_gamma_lower(fit_1.kappa, z / fit_1.theta)
    return DepReport(p_miss, p_fa, min(p_miss + p_fa, 1.0), omega2)


def dep_phase2(params: SystemParams, alloc: PowerAllocation, omega2: float) -> DepReport:
    """DEP of the phase-2 radiometer under the gamma approximation."""
    return _dep2(params, alloc.beta_t, omega2)


class _NoInteriorOptimum(ValueError):
    """The approximated DEP curve has no interior minimum (it sits at 1)."""


def _lambert_w0_of_exp(log_x: float) -> float:
    """W0(exp(log_x)), robust when exp(log_x) itself would overflow."""
    if log_x <= 700.0:
        return lambert_w0(math.exp(log_x))
    # solve w + ln w = log_x by Newton from the asymptotic head term
    w = log_x - math.log(log_x)
    for _ in range(60):
        f = w + math.log(w) - log_x
        w -= f * w / (w + 1.0)
        if abs(f) <= 1e-14 * abs(log_x):
            break
    return w


def _lambert_wm1(x: float) -> float:
    """Lower branch W_-1 on [-1/e, 0): the root with w <= -1."""
    if not -math.exp(-1.0) - 4e-16 <= x < 0.0:
        raise ValueError(f"lambert_wm1 requires x in [-1/e, 0), got {x}")
    p = math.sqrt(max(2.0 * (1.0 + math.e * x), 0.0))
    if p < 0.5:
        w = -1.0 - p - p * p / 3.0
    else:
        lx = math.log(-x)
        w = lx - math.log(-lx)
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 1e-14 * max(abs(x), 1e-300):
            return w
        wp1 = w + 1.0
        if wp1 == 0.0:
            return w
        w -= f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
    return w


def _crossing_root(dk: float, inv_dt: float, log_g: float) -> float:
    """DEP-minimizing root of dk*ln z + inv_dt*z = log_g by safeguarded
    bisection; exact fallback where the Lambert expression is
    ill-conditioned (tiny shape or scale differences)."""

    def h(z):
        return dk * math.log(z) + inv_dt * z - log_g

    if abs(dk) < 1e-300:
        z = log_g / inv_dt
        if not z > 0.0:
            raise _NoInteriorOptimum("no interior optimum for the phase-2 threshold")
        return z
    if abs(inv_dt) < 1e-300:
        e = log_g / dk
        if e > 690.0:
            raise _NoInteriorOptimum("optimal threshold diverges: DEP sits at 1")
        z = math.exp(e)
        if not z > 0.0:
            raise _NoInteriorOptimum("no interior optimum for the phase-2 threshold")
        return z
    if dk > 0.0 and inv_dt > 0.0:
        # h strictly increasing with full range: bracket by doubling
        lo = hi = max(min(abs(log_g) / inv_dt, 1e300), 1e-300)
        for _ in range(2100):
            if h(hi) >= 0.0:
                break
            hi *= 2.0
        for _ in range(2100):
            if h(lo) <= 0.0:
                break
            lo *= 0.5
    elif dk < 0.0 and inv_dt < 0.0:
        raise _NoInteriorOptimum("inconsistent moment fits")  # larger mean forbids this
    else:
        z_m = -dk / inv_dt  # stationary point of h
        if dk > 0.0:
            # increasing-then-decreasing: the minimum is the left crossing
            if h(z_m) < 0.0:
                raise _NoInteriorOptimum("no density crossing: DEP sits at 1")
            hi = z_m
            lo = z_m
            for _ in range(2100):
                if h(lo) <= 0.0:
                    break
                lo *= 0.5
        else:
            # decreasing-then-increasing: the minimum is the right crossing
            if h(z_m) > 0.0:
                raise _NoInteriorOptimum("no density crossing: DEP sits at 1")
            lo = z_m
            hi = z_m
            for _ in range(2100):
                if h(hi) >= 0.0:
                    break
                hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


def _omega2_star(params: SystemParams, beta_t: float) -> float:
    if not 0.0 < beta_t < 1.0:
        raise ValueError("omega2_star requires beta_t in (0, 1)")
    if params.relay_power() <= 0.0:
        raise ValueError("omega2_star requires positive relay power")
    fit_t = gamma_fit_chi(beta_t, params)
    fit_1 = gamma_fit_chi(1.0, params)
    dk = fit_1.kappa - fit_t.kappa
    dt = fit_1.theta - fit_t.theta
    kappa_deg = abs(dk) <= _DEGENERATE_REL * fit_1.kappa
    theta_deg = abs(dt) <= _DEGENERATE_REL * fit_1.theta
    if kappa_deg and theta_deg:
        raise ValueError("degenerate parameters: the two gamma fits coincide")
    # z solves dk*ln z + inv_dt*z = ln G, the density-crossing condition;
    # both kappa(x) and theta(x) are non-monotone, so either difference can
    # vanish at an interior beta_t, where the Lambert expression has a
    # removable singularity and the crossing equation is solved directly
    inv_dt = dt / (fit_t.theta * fit_1.theta)
    log_g = (math.lgamma(fit_1.kappa) + fit_1.kappa * math.log(fit_1.theta)
             - math.lgamma(fit_t.kappa) - fit_t.kappa * math.log(fit_t.theta))
    if kappa_deg or theta_deg or abs(log_g) > 600.0 * abs(dk):
        z = _crossing_root(dk, inv_dt, log_g)
    else:
        ratio = inv_dt / dk
        if ratio > 0.0:
            w = _lambert_w0_of_exp(math.log(ratio) + log_g / dk)
        else:
            # opposite-sign differences: the densities cross twice (or not at
            # all); the minimum is the crossing where the DEP slope turns
            # positive, on the principal branch for dk > 0 and on W_-1 for
            # dk < 0 (there the principal crossing is a local maximum)
            arg = ratio * math.exp(log_g / dk)
            if arg < -math.exp(-1.0):
                raise _NoInteriorOptimum("no density crossing: DEP sits at 1")
            w = lambert_w0(arg) if dk > 0.0 else _lambert_wm1(min(arg, -1e-300))
        z = (dk / inv_dt) * w
    if not z > 0.0:
        raise _NoInteriorOptimum("no interior optimum for the phase-2 threshold")
    return z / params.n_samples + params.sigma2


def omega2_star(params: SystemParams, alloc: PowerAllocation) -> float:
    """DEP-minimizing phase-2 threshold from the Lambert-W closed form.

    Solves f_T(z) = f_1(z) for the two fitted gamma densities; degenerate
    when the fits coincide (beta_t -> 1 or zero relay power), in which case
    the phase-2 DEP is flat at 1 and no finite optimum exists.
    """
    return _omega2_star(params, alloc.beta_t)


def min_dep_phase2(params: SystemParams, beta_t: float) -> float:
    """Minimum phase-2 DEP over the threshold, as a function of beta_t alone."""
    if not 0.5 <= beta_t <= 1.0:
        raise ValueError("beta_t must lie in [0.5, 1]")
    if 1.0 - beta_t < 1e-9:
        return 1.0  # chi(beta_t) -> chi(1): the statistic pair is indistinguishable
    try:
        return _dep2(params, beta_t, _omega2_star(params, beta_t)).p_dep
    except _NoInteriorOptimum:
        return 1.0


def _monotone_root(f, p_dep_th: float, what: str) -> float:
    """Bisection root of f(x) = p_dep_th on [0.5, 1] for nondecreasing f.

    The monotonicity is asserted numerically on a dense grid first rather
    than assumed, and threshold values outside f's range clamp to the
    corresponding endpoint.
    """
    xs = [0.5 + 0.5 * i / (_MONOTONE_GRID - 1) for i in range(_MONOTONE_GRID)]
    vals = [f(x) for x in xs]
    for lo, hi in zip(vals, vals[1:]):
        if hi < lo - 1e-9:
            raise RuntimeError(f"minimum DEP is not nondecreasing over {what}")
    if p_dep_th >= 1.0:
        return 1.0
    if p_dep_th <= vals[0]:
        return 0.5
    lo, hi = 0.5, 1.0
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if f(mid) < p_dep_th:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def alpha_region_root(params: SystemParams, p_dep_th: float) -> float:
    """Smallest alpha_w whose minimum phase-1 DEP stays above p_dep_th.

    Any alpha_w in [root, 1] keeps the warden's best-case DEP at or above the
    covertness target.
    """
    n = params.n_samples
    return _monotone_root(lambda aw: _min_dep1(n, aw), p_dep_th, "alpha_w in [0.5, 1]")


def beta_region_root(params: SystemParams, p_dep_th: float) -> float:
    """Smallest beta_t whose minimum phase-2 DEP stays above p_dep_th."""
    return _monotone_root(lambda bt: min_dep_phase2(params, bt), p_dep_th,
                          "beta_t in [0.5, 1]")
