"""Closed-form covert-rate maximization.

The max-min covert rate decouples across the two phases once the power
budgets are taken with equality, so the optimum is the smallest feasible
public-signal share in each phase; the fairness coupling then pins alpha_w
to beta_t so both hops carry the covert signal at the same SINR.

The fairness equation relates the legitimate relay and far-user links
(SR and RB), consistent with the covert-signal SINRs it equalizes; a switch
evaluates the variant written in terms of the eavesdropper links instead,
for comparison only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covertness import alpha_region_root, beta_region_root
from .model import (
    ADAPTIVE,
    ChannelRealization,
    PowerAllocation,
    SystemParams,
    compute_sinrs,
)

__all__ = [
    "CovertSolution",
    "fairness_alpha",
    "maxmin_covert_pa",
    "qos_lower_bounds",
    "relay_power_cap",
    "resolve_relay_power",
]

_EDGE_NUDGE = 1e-9


@dataclass(frozen=True)
class CovertSolution:
    """Outcome of the max-min covert power allocation.

    binding_constraint tags which lower bound fixed beta_t:
      - "dep_region": the phase-2 covertness region root
      - "qos_tom": Tom's public-rate bound
      - "qos_willie": the coupled bound, driven by Willie's public-rate bound
      - "fairness": the coupled bound, driven by the phase-1 covertness root
    Infeasible problems return alloc=None with the tag of the failing bound.
    """

    alloc: PowerAllocation | None
    covert_rate: float
    binding_constraint: str
    feasible: bool


def relay_power_cap(params: SystemParams, ch: ChannelRealization, r_w_hat: float) -> float:
    """Largest relay power that keeps Willie's second-phase rate above r_w_hat.

    A zero cap means the direct link cannot support the target even without
    relay interference, i.e. the second-phase QoS is infeasible.
    """
    if r_w_hat <= 0.0:
        raise ValueError("r_w_hat must be positive")
    gamma_hat = 2.0 ** (2.0 * r_w_hat) - 1.0
    cap = (params.p_s * ch.g["SW"] / gamma_hat - params.sigma2) / ch.g["RW"]
    return max(0.0, cap)


def resolve_relay_power(params: SystemParams, ch: ChannelRealization) -> SystemParams:
    """Replace the adaptive relay-power policy with its per-realization value."""
    if params.p_r == ADAPTIVE:
        return params.with_relay_power(relay_power_cap(params, ch, params.r_w_hat))
    return params


def qos_lower_bounds(params: SystemParams, ch: ChannelRealization) -> tuple[float, float]:
    """Smallest public shares (alpha_w, beta_t) meeting the users' rate targets.

    Valid under tight power budgets; each bound binds on the weaker of the
    two links that must decode the public signal.
    """
    l1 = min(ch.g["SR"], ch.g["SW"])
    l2 = min(ch.g["RT"], ch.g["RB"])
    if l1 <= 0.0 or l2 <= 0.0:
        raise ValueError("QoS bounds require nonzero channel gains")
    gamma_w = 2.0 ** (2.0 * params.r_w) - 1.0
    gamma_t = 2.0 ** (2.0 * params.r_t) - 1.0
    ps, pr, s2 = params.p_s, params.relay_power(), params.sigma2
    lb_alpha = gamma_w * (ps + s2 / l1) / ((1.0 + gamma_w) * ps)
    if pr <= 0.0:
        lb_beta = math.inf
    else:
        lb_beta = gamma_t * (pr + s2 / l2) / ((1.0 + gamma_t) * pr)
    return lb_alpha, lb_beta


def _fairness_ratio(params: SystemParams, ch: ChannelRealization,
                    use_printed_eve_channels: bool) -> float:
    if use_printed_eve_channels:
        num, den = ch.g["RE"], ch.g["SE"]
    else:
        num, den = ch.g["RB"], ch.g["SR"]
    if den <= 0.0 or num < 0.0:
        raise ValueError("fairness coupling requires positive channel gains")
    return params.relay_power() * num / (params.p_s * den)


def fairness_alpha(beta_t: float, params: SystemParams, ch: ChannelRealization,
                   use_printed_eve_channels: bool = False) -> float:
    """alpha_w that equalizes the two covert-signal SINRs at tight budgets."""
    if not 0.0 <= beta_t <= 1.0:
        raise ValueError("beta_t must lie in [0, 1]")
    return 1.0 - (1.0 - beta_t) * _fairness_ratio(params, ch, use_printed_eve_channels)


def maxmin_covert_pa(params: SystemParams, ch: ChannelRealization,
                     p_dep_th: float | None = None,
                     use_printed_eve_channels: bool = False) -> CovertSolution:
    """Max-min fair covert-rate power allocation under QoS and covertness.

    beta_t takes the largest of its three lower bounds (phase-2 covertness
    root, Tom's QoS, and the fairness-coupled image of alpha_w's bounds);
    alpha_w follows from the fairness equation with all budgets spent.
    """
    th = params.p_dep_th if p_dep_th is None else p_dep_th
    params = resolve_relay_power(params, ch)
    if params.relay_power() <= 0.0:
        return CovertSolution(None, 0.0, "qos_willie", False)

    lb_alpha, lb_beta = qos_lower_bounds(params, ch)
    alpha_root = alpha_region_root(params, th)
    beta_root = beta_region_root(params, th)
    alpha_floor = max(alpha_root, lb_alpha, 0.5 + _EDGE_NUDGE)
    if alpha_floor >= 1.0:
        tag = "qos_willie" if lb_alpha > alpha_root else "dep_region"
        return CovertSolution(None, 0.0, tag, False)

    rho = _fairness_ratio(params, ch, use_printed_eve_channels)
    if rho <= 0.0:
        return CovertSolution(None, 0.0, "fairness", False)
    coupled = 1.0 - (1.0 - alpha_floor) / rho
    candidates = {
        "dep_region": beta_root,
        "qos_tom": lb_beta,
        "qos_willie" if lb_alpha > alpha_root else "fairness": coupled,
    }
    binding = max(candidates, key=candidates.get)
    beta_star = max(candidates[binding], 0.5 + _EDGE_NUDGE)
    if beta_star >= 1.0:
        return CovertSolution(None, 0.0, binding, False)

    # alpha_w from the fairness equation keeps the two covert SINRs equal
    # exactly; the coupled candidate already enforces alpha_star >= alpha_floor
    alpha_star = fairness_alpha(beta_star, params, ch, use_printed_eve_channels)
    if alpha_star < alpha_floor - 1e-9 or alpha_star >= 1.0:
        return CovertSolution(None, 0.0, binding, False)

    alloc = PowerAllocation(alpha_w=alpha_star, alpha_b=1.0 - alpha_star,
                            beta_t=beta_star, beta_b=1.0 - beta_star)
    sinrs = compute_sinrs(params, alloc, ch)
    if not use_printed_eve_channels:
        gap = abs(sinrs.gamma_r_cb - sinrs.gamma_b_cb)
        if gap > 1e-10 * max(sinrs.gamma_r_cb, sinrs.gamma_b_cb, 1e-300):
            raise RuntimeError("fairness equality violated at the solution")
    rate = 0.5 * math.log2(1.0 + min(sinrs.gamma_r_cb, sinrs.gamma_b_cb))
    return CovertSolution(alloc, rate, binding, True)


def _grid_search_covert(params: SystemParams, ch: ChannelRealization,
                        p_dep_th: float | None = None,
                        resolution: int = 2000) -> tuple[float, float]:
    """Exhaustive (alpha_w, beta_t) search over the max-min covert rate.

    Validation oracle for maxmin_covert_pa: evaluates min of the two hop
    covert rates on a resolution x resolution grid under the same QoS,
    covertness-region and budget constraints.  Returns (best rate, rate gap
    across one grid step at the optimum) for tolerance bookkeeping.
    """
    th = params.p_dep_th if p_dep_th is None else p_dep_th
    params = resolve_relay_power(params, ch)
    if params.relay_power() <= 0.0:
        return 0.0, 0.0
    lb_alpha, lb_beta = qos_lower_bounds(params, ch)
    alpha_floor = max(alpha_region_root(params, th), lb_alpha)
    beta_floor = max(beta_region_root(params, th), lb_beta)
    if alpha_floor >= 1.0 or beta_floor >= 1.0:
        return 0.0, 0.0
    aw = np.linspace(0.5, 1.0, resolution)
    bt = np.linspace(0.5, 1.0, resolution)
    ps, pr, s2 = params.p_s, params.relay_power(), params.sigma2
    rate_a = 0.5 * np.log2(1.0 + (1.0 - aw) * ps * ch.g["SR"] / s2)
    rate_b = 0.5 * np.log2(1.0 + (1.0 - bt) * pr * ch.g["RB"] / s2)
    rate_a[aw < alpha_floor] = -np.inf
    rate_b[bt < beta_floor] = -np.inf
    # max-min over the product grid separates: best pairing of the per-phase maxima
    ia = int(np.argmax(rate_a))
    ib = int(np.argmax(rate_b))
    best = min(rate_a[ia], rate_b[ib])
    if not np.isfinite(best):
        return 0.0, 0.0
    step_gap = 0.0
    for arr, idx in ((rate_a, ia), (rate_b, ib)):
        for j in (idx - 1, idx + 1):
            if 0 <= j < resolution and np.isfinite(arr[j]):
                step_gap = max(step_gap, abs(arr[idx] - arr[j]))
    return float(best), float(step_gap)
