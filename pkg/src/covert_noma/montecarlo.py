"""Monte Carlo oracle for every analytic quantity in the library.

Trials are generated in fixed-size chunks, each from its own derived random
stream, and reduced in chunk order; the result is bit-identical no matter how
the chunks would be scheduled across workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .model import (
    CombinerMode,
    LINKS,
    PowerAllocation,
    SystemParams,
    end_to_end_rates_arrays,
    exponential,
    gamma_sum,
    stream,
)

__all__ = ["CHUNK_TRIALS", "McEstimate", "mc_dep", "mc_empirical_cdf", "mc_sop"]

CHUNK_TRIALS = 1 << 18
CdfQuantity = Literal["V_SC", "V_MRC", "U"]


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    trials: int
    seed: int


def _chunks(trials: int):
    done = 0
    cid = 0
    while done < trials:
        n = min(CHUNK_TRIALS, trials - done)
        yield cid, n
        done += n
        cid += 1


def _finish(total: float, total_sq: float, trials: int, seed: int) -> McEstimate:
    mean = total / trials
    if trials > 1:
        var = max(total_sq - trials * mean * mean, 0.0) / (trials - 1)
    else:
        var = 0.0
    return McEstimate(mean=mean, std_error=math.sqrt(var / trials), trials=trials, seed=seed)


def mc_dep(params: SystemParams, alloc: PowerAllocation, omega: float,
           phase: int, trials: int, seed: int) -> McEstimate:
    """Estimate the DEP of the phase-1 or phase-2 radiometer.

    Each trial draws the converged test statistic under both hypotheses from
    a shared aggregate and scores one miss indicator plus one false-alarm
    indicator; for any fixed threshold the two events are disjoint, so the
    per-trial score stays in {0, 1} and the estimate is a probability.
    """
    if phase not in (1, 2):
        raise ValueError("phase must be 1 or 2")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n, s2, ps = params.n_samples, params.sigma2, params.p_s
    thr = n * (omega - s2)
    total = 0.0
    total_sq = 0.0
    for cid, count in _chunks(trials):
        gen = stream(seed, cid)
        tau_se = gamma_sum(gen, n, params.lam["SE"], count)
        if phase == 1:
            stat_quiet = alloc.alpha_w * ps * tau_se
            stat_covert = ps * tau_se
        else:
            pr = params.relay_power()
            tau_re = gamma_sum(gen, n, params.lam["RE"], count)
            stat_quiet = alloc.beta_t * pr * tau_re + ps * tau_se
            stat_covert = pr * tau_re + ps * tau_se
        score = (stat_quiet > thr).astype(np.float64) + (stat_covert < thr)
        total += float(score.sum())
        total_sq += float((score * score).sum())
    return _finish(total, total_sq, trials, seed)


def _draw_gains(gen, params: SystemParams, count: int) -> dict[str, np.ndarray]:
    return {link: exponential(gen, params.lam[link], count) for link in LINKS}


def mc_sop(params: SystemParams, alloc: PowerAllocation, r_b: float,
           mode: CombinerMode, trials: int, seed: int) -> McEstimate:
    """Estimate the secrecy outage probability at target rate r_b."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    total = 0.0
    total_sq = 0.0
    for cid, count in _chunks(trials):
        gen = stream(seed, cid)
        gains = _draw_gains(gen, params, count)
        rate_b, rate_e = end_to_end_rates_arrays(params, alloc, gains, mode)
        hits = float(((rate_b - rate_e) <= r_b).sum())
        total += hits
        total_sq += hits  # indicator: square equals itself
    return _finish(total, total_sq, trials, seed)


def mc_empirical_cdf(quantity: CdfQuantity, grid: Sequence[float],
                     params: SystemParams, alloc: PowerAllocation,
                     trials: int, seed: int) -> list[McEstimate]:
    """Empirical CDF estimates of V_SC, V_MRC or U on a grid of points."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if quantity not in ("V_SC", "V_MRC", "U"):
        raise ValueError(f"unknown quantity {quantity!r}")
    pts = np.asarray(grid, dtype=np.float64)
    totals = np.zeros(pts.size)
    ps, s2 = params.p_s, params.sigma2
    pr = params.relay_power()
    for cid, count in _chunks(trials):
        gen = stream(seed, cid)
        gains = _draw_gains(gen, params, count)
        if quantity == "U":
            gamma_r = np.minimum(
                alloc.alpha_w * ps * gains["SR"] / (alloc.alpha_b * ps * gains["SR"] + s2),
                alloc.alpha_b * ps * gains["SR"] / s2,
            )
            gamma_b = np.minimum(
                alloc.beta_t * pr * gains["RB"] / (alloc.beta_b * pr * gains["RB"] + s2),
                alloc.beta_b * pr * gains["RB"] / s2,
            )
            values = np.minimum(gamma_r, gamma_b)
        else:
            ge1 = alloc.alpha_b * ps * gains["SE"] / s2
            ge2 = alloc.beta_b * pr * gains["RE"] / (ps * gains["SE"] + s2)
            values = np.maximum(ge1, ge2) if quantity == "V_SC" else ge1 + ge2
        totals += (values[:, None] <= pts[None, :]).sum(axis=0)
    out = []
    for k in range(pts.size):
        # indicators: the sum of squares equals the sum
        out.append(_finish(float(totals[k]), float(totals[k]), trials, seed))
    return out
