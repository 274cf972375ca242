"""Secrecy-outage framework: eavesdropper CDFs, the legitimate min-SINR
density, and the Gauss-Chebyshev quadrature of the outage integral.

The MRC eavesdropper CDF has no elementary closed form; its inner integral
expands into a power series whose terms are truncated-exponential moments.
We evaluate those moments through the regularized lower incomplete gamma
(or its small-argument series, which also covers negative exponents) instead
of the textbook gamma-ratio form, which cancels catastrophically.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import CombinerMode, PowerAllocation, SystemParams
from .specfun import chebyshev_rule, reg_gamma_lower

__all__ = [
    "SopConfig",
    "cdf_u",
    "cdf_v_mrc",
    "cdf_v_sc",
    "pdf_u",
    "sop",
]


@dataclass(frozen=True)
class SopConfig:
    mode: CombinerMode = "SC"
    quadrature_order: int = 200
    mrc_series_max_terms: int = 50
    mrc_series_rel_tol: float = 1e-12

    def __post_init__(self):
        if self.mode not in ("SC", "MRC"):
            raise ValueError(f"unknown combining mode {self.mode!r}")
        if self.quadrature_order < 1:
            raise ValueError("quadrature_order must be >= 1")
        if self.mrc_series_max_terms < 1:
            raise ValueError("mrc_series_max_terms must be >= 1")
        if self.mrc_series_rel_tol <= 0:
            raise ValueError("mrc_series_rel_tol must be positive")


def _ab(params: SystemParams, alloc: PowerAllocation) -> tuple[float, float]:
    if alloc.alpha_b <= 0.0 or alloc.beta_b <= 0.0:
        raise ValueError("eavesdropper CDFs require positive covert power shares")
    a = params.sigma2 / (params.p_s * params.lam["SE"])
    b = params.sigma2 / (params.relay_power() * params.lam["RE"])
    return a, b


def cdf_v_sc(v: float, params: SystemParams, alloc: PowerAllocation) -> float:
    """CDF of the eavesdropper SNR under selection combining."""
    a, b = _ab(params, alloc)
    if v <= 0.0:
        return 0.0
    ab_, bb = alloc.alpha_b, alloc.beta_b
    coef = bb * a / (b * v + bb * a)
    val = (1.0 - math.exp(-a * v / ab_)
           - coef * math.exp(-b * v / bb)
           + coef * math.exp(-b * v * v / (bb * ab_) - a * v / ab_ - b * v / bb))
    return min(max(val, 0.0), 1.0)


def _log_truncated_moment(n: int, x_up: float, mu: float) -> float:
    """log of the integral of y^n exp(-mu y) over [0, x_up].

    Stable for any real mu; works in logs because the bare moment overflows
    long before the series term (moment times a factorially small
    coefficient) does.
    """
    y = mu * x_up
    if y > 1.0:
        p = reg_gamma_lower(n + 1, y)
        base = math.lgamma(n + 1) - (n + 1) * math.log(mu)
        if p <= 0.0:
            # deep tail: bound the regularized gamma by the smallest double
            return base - 744.0
        return base + math.log(p)
    # small or negative y: x_up^(n+1) * sum_k (-y)^k / (k! (n+1+k)), which has
    # all-positive terms for y <= 0 and negligible cancellation for y <= 1
    total = 0.0
    term = 1.0
    k = 0
    while True:
        total += term / (n + 1 + k)
        k += 1
        term *= -y / k
        if abs(term) / (n + 1 + k) <= 1e-18 * max(abs(total), 1e-300) or k > 400:
            break
    return (n + 1) * math.log(x_up) + math.log(total)


def _log_gamma_cdf_bound(a: float, y: float) -> float:
    """Chernoff bound on log P(a, y), the regularized lower gamma CDF."""
    if y >= a:
        return 0.0
    return a * math.log(y / a) + a - y


def _tail_negligible(m_start: int, log_coef: float, log_growth: float,
                     x_up: float, mu: float, bar: float) -> bool:
    """Certify that all series terms beyond m_start stay below exp(bar).

    Bounds each remaining term by its full gamma moment times the Chernoff
    CDF factor; the bound is unimodal in m (it rises towards the exponential
    tilt point and collapses factorially after), so scanning past the tilt
    suffices.
    """
    y = mu * x_up
    log_mu = math.log(mu)
    m_end = int(y / 2) + m_start + 60
    worst = -math.inf
    lc = log_coef
    for m in range(m_start, m_end + 1):
        order = 2 * m + 1
        bound = lc + math.lgamma(order) - order * log_mu + _log_gamma_cdf_bound(order, y)
        worst = max(worst, bound)
        lc += log_growth - math.log(m + 1)
    return worst + math.log(m_end - m_start + 1) <= bar


def cdf_v_mrc(v: float, params: SystemParams, alloc: PowerAllocation,
              cfg: SopConfig | None = None) -> float:
    """CDF of the eavesdropper SNR under maximal ratio combining.

    The series index m runs until a term's relative contribution drops below
    cfg.mrc_series_rel_tol or the term cap is hit.  Terms can pass through a
    local dip before a secondary hump when the exponential tilt is moderate,
    so early exit additionally requires the moment order to have passed the
    tilt point or a certified-negligible bound on the remaining tail;
    stopping at the dip would silently return a truncated value.
    """
    if cfg is None:
        cfg = SopConfig(mode="MRC")
    a, b = _ab(params, alloc)
    if v <= 0.0:
        return 0.0
    ab_, bb = alloc.alpha_b, alloc.beta_b
    # scaled inner integral: x_up in units of lambda_SE
    x_up = a * v / ab_
    mu = 1.0 + (b / a) * (v - ab_) / bb
    growth = b * ab_ / (bb * a * a)
    log_growth = math.log(growth)
    tilt = max(mu * x_up, 0.0)
    total = 0.0
    log_coef = 0.0  # log(growth^m / m!)
    converged = False
    m_stop = cfg.mrc_series_max_terms
    for m in range(cfg.mrc_series_max_terms):
        log_term = log_coef + _log_truncated_moment(2 * m, x_up, mu)
        term = math.exp(log_term) if log_term > -700.0 else 0.0
        total += term
        if 2 * m + 1 >= tilt and term <= cfg.mrc_series_rel_tol * max(total, 1e-300):
            converged = True
            m_stop = m + 1
            break
        log_coef += log_growth - math.log(m + 1)
    if not converged and mu > 0.0:
        bar = math.log(cfg.mrc_series_rel_tol) + math.log(max(total, 1e-300))
        converged = _tail_negligible(cfg.mrc_series_max_terms, log_coef,
                                     log_growth, x_up, mu, bar)
    if not converged:
        warnings.warn(
            "MRC eavesdropper CDF series hit its term cap before meeting the "
            "relative tolerance",
            RuntimeWarning,
            stacklevel=2,
        )
    val = 1.0 - math.exp(-a * v / ab_) - math.exp(-b * v / bb) * total
    return min(max(val, 0.0), 1.0)


def _theta(alloc: PowerAllocation) -> float:
    return min(alloc.alpha_w / alloc.alpha_b, alloc.beta_t / alloc.beta_b)


def cdf_u(u: float, params: SystemParams, alloc: PowerAllocation) -> float:
    """CDF of the legitimate end-to-end minimum SINR.

    Above theta_cap = min(alpha_w/alpha_b, beta_t/beta_b) the SIC stage can
    no longer reach the requested SINR with probability one, so the CDF
    saturates at 1.
    """
    if alloc.alpha_b <= 0.0 or alloc.beta_b <= 0.0:
        raise ValueError("cdf_u requires positive covert power shares")
    if u <= 0.0:
        return 0.0
    if u >= _theta(alloc):
        return 1.0
    c, d = _cd(params)
    denom_a = min(alloc.alpha_w - u * alloc.alpha_b, alloc.alpha_b)
    denom_b = min(alloc.beta_t - u * alloc.beta_b, alloc.beta_b)
    return 1.0 - math.exp(-c * u / denom_a - d * u / denom_b)


def _cd(params: SystemParams) -> tuple[float, float]:
    c = params.sigma2 / (params.p_s * params.lam["SR"])
    d = params.sigma2 / (params.relay_power() * params.lam["RB"])
    return c, d


def pdf_u(u: float, params: SystemParams, alloc: PowerAllocation) -> float:
    """Density of the legitimate end-to-end minimum SINR on (0, theta_cap).

    Each phase switches between a "SIC-limited" and a "covert-limited" branch;
    the boundary (a measure-zero point where both branches agree) is assigned
    to the covert-limited branch so exactly one fires.
    """
    if alloc.alpha_b <= 0.0 or alloc.beta_b <= 0.0:
        raise ValueError("pdf_u requires positive covert power shares")
    if u <= 0.0 or u >= _theta(alloc):
        return 0.0
    c, d = _cd(params)
    aw, ab_ = alloc.alpha_w, alloc.alpha_b
    bt, bb = alloc.beta_t, alloc.beta_b
    rem_a = aw - u * ab_
    rem_b = bt - u * bb
    if rem_a >= ab_:           # covert-limited branch, min = alpha_b
        surv_a = math.exp(-c * u / ab_)
        dens_a = (c / ab_) * surv_a
    else:                      # SIC-limited branch, min = alpha_w - u alpha_b
        surv_a = math.exp(-c * u / rem_a)
        dens_a = (c * aw / rem_a ** 2) * surv_a
    if rem_b >= bb:
        surv_b = math.exp(-d * u / bb)
        dens_b = (d / bb) * surv_b
    else:
        surv_b = math.exp(-d * u / rem_b)
        dens_b = (d * bt / rem_b ** 2) * surv_b
    return dens_a * surv_b + dens_b * surv_a


def sop(params: SystemParams, alloc: PowerAllocation, r_b: float,
        cfg: SopConfig | None = None) -> float:
    """Secrecy outage probability of the covert signal at target rate r_b.

    Gauss-Chebyshev quadrature of the outage integral over the feasible
    SINR window [gamma_bar_b, theta_cap] with the consistent node mapping
    u_m = gamma_bar_b + (theta_cap - gamma_bar_b)(delta_m + 1)/2; an empty
    window (gamma_bar_b >= theta_cap) is a certain outage.
    """
    if r_b < 0.0:
        raise ValueError("r_b must be nonnegative")
    if cfg is None:
        cfg = SopConfig()
    gamma_bar = 2.0 ** (2.0 * r_b) - 1.0
    theta = _theta(alloc)
    if gamma_bar >= theta:
        return 1.0
    rule = chebyshev_rule(cfg.quadrature_order)
    half_span = 0.5 * (theta - gamma_bar)
    total = 0.0
    scale = 2.0 ** (2.0 * r_b)
    for delta, wf in zip(rule.nodes, rule.weight_factor):
        u_m = gamma_bar + half_span * (delta + 1.0)
        f_u = pdf_u(u_m, params, alloc)
        if f_u == 0.0:
            continue
        v_m = (u_m - gamma_bar) / scale
        if cfg.mode == "SC":
            f_v = cdf_v_sc(v_m, params, alloc)
        else:
            f_v = cdf_v_mrc(v_m, params, alloc, cfg)
        total += wf * f_u * f_v
    val = 1.0 - (theta - gamma_bar) * math.pi / (2.0 * cfg.quadrature_order) * total
    return min(max(val, 0.0), 1.0)
