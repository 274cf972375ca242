"""Core data model for the two-phase CDRT-NOMA network.

Phase 1: the source broadcasts a NOMA superposition of a public signal for
the near user (Willie) and a covert signal for the far user (Bob), decoded by
the relay (Roy) via SIC.  Phase 2: the relay forwards a superposition for its
own receiver (Tom) and for Bob, while the source simultaneously serves Willie
with a fresh signal that doubles as jamming against the warden (Eve).

All quantities are linear (mW for powers, linear SNR); dB conversions belong
to the CLI boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Mapping

import numpy as np

__all__ = [
    "ADAPTIVE",
    "AnalysisConstants",
    "ChannelRealization",
    "CombinerMode",
    "LINKS",
    "PowerAllocation",
    "RateSet",
    "SinrSet",
    "SystemParams",
    "achievable_rates",
    "compute_sinrs",
    "derive_constants",
    "eve_combined",
    "exponential",
    "gamma_sum",
    "half_rate",
    "sample_channels",
    "stream",
]

LINKS = ("SR", "RB", "SW", "SE", "RT", "RE", "RW")
ADAPTIVE = "adaptive"
CombinerMode = Literal["SC", "MRC"]

_TABLE_GAINS = {"SR": 1.0, "RB": 1.0, "SW": 0.5, "SE": 0.5, "RT": 0.5, "RE": 0.5, "RW": 0.5}
_U64 = (1 << 64) - 1
# sums of exponentials stay bit-auditable up to this shape; larger shapes use
# the generator's rejection sampler
_GAMMA_SUM_MAX = 64


# ---------------------------------------------------------------------------
# random number streams
# ---------------------------------------------------------------------------

def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Counter-based random stream keyed by (master seed, stream id).

    Philox4x64 is a counter-mode generator, so distinct keys give independent
    reproducible streams: parallel chunks of a simulation can each derive
    their own stream id and the merged result does not depend on scheduling.
    """
    return np.random.Generator(np.random.Philox(key=[seed & _U64, stream_id & _U64]))


def exponential(gen: np.random.Generator, mean: float, size=None):
    """Exponential draw via the inverse CDF, -mean * log(1 - U)."""
    u = gen.random(size)
    return -mean * np.log1p(-u)


def gamma_sum(gen: np.random.Generator, n: int, mean: float, size=None):
    """Draw Gamma(n, mean) as a sum of n exponentials (rejection above n=64)."""
    if n <= _GAMMA_SUM_MAX:
        total = np.zeros(size) if size is not None else 0.0
        for _ in range(n):
            total = total + exponential(gen, mean, size)
        return total
    return gen.gamma(shape=n, scale=mean, size=size)


# ---------------------------------------------------------------------------
# parameter and state containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemParams:
    """Transmit powers, channel statistics and service targets.

    p_r is either a linear power or the policy marker "adaptive", meaning the
    relay power is set per channel realization from the near user's
    second-phase rate target (see covert_opt.relay_power_cap).
    """

    p_s: float = 10.0
    p_r: float | str = ADAPTIVE
    sigma2: float = 1.0
    lam: Mapping[str, float] = field(default_factory=lambda: dict(_TABLE_GAINS))
    n_samples: int = 15
    r_w: float = 0.25
    r_t: float = 0.5
    r_w_hat: float = 0.5
    r_b: float = 0.2
    p_dep_th: float = 0.8

    def __post_init__(self):
        if self.p_s <= 0:
            raise ValueError("p_s must be positive")
        if isinstance(self.p_r, str):
            if self.p_r != ADAPTIVE:
                raise ValueError(f"unknown relay power policy {self.p_r!r}")
        elif self.p_r < 0:
            raise ValueError("p_r must be nonnegative")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        missing = [l for l in LINKS if l not in self.lam]
        if missing:
            raise ValueError(f"missing average channel gains for links {missing}")
        if any(self.lam[l] <= 0 for l in LINKS):
            raise ValueError("all average channel gains must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        for name in ("r_w", "r_t", "r_w_hat", "r_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0.0 <= self.p_dep_th <= 1.0:
            raise ValueError("p_dep_th must lie in [0, 1]")

    def relay_power(self) -> float:
        """Numeric relay power; raises if the adaptive policy is unresolved."""
        if isinstance(self.p_r, str):
            raise ValueError(
                "relay power policy 'adaptive' must be resolved against a "
                "channel realization first (covert_opt.resolve_relay_power)"
            )
        return self.p_r

    def with_relay_power(self, p_r: float) -> "SystemParams":
        return replace(self, p_r=p_r)


@dataclass(frozen=True)
class PowerAllocation:
    """NOMA power-allocation coefficients for both phases.

    The public signal always gets the larger share (alpha_w > alpha_b,
    beta_t > beta_b) so SIC decoding order is well defined, and each phase
    respects its unit power budget.
    """

    alpha_w: float
    alpha_b: float
    beta_t: float
    beta_b: float

    def __post_init__(self):
        for name in ("alpha_w", "alpha_b", "beta_t", "beta_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if not self.alpha_w > self.alpha_b:
            raise ValueError("NOMA ordering requires alpha_w > alpha_b")
        if not self.beta_t > self.beta_b:
            raise ValueError("NOMA ordering requires beta_t > beta_b")
        if self.alpha_w + self.alpha_b > 1.0 + 1e-9:
            raise ValueError("alpha budget exceeded")
        if self.beta_t + self.beta_b > 1.0 + 1e-9:
            raise ValueError("beta budget exceeded")


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the squared channel gains plus Eve's N-sample aggregates."""

    g: Mapping[str, float]
    tau_se: float
    tau_re: float


@dataclass(frozen=True)
class SinrSet:
    gamma_r_sw: float
    gamma_r_cb: float
    gamma_w_sw: float
    gamma_b_st: float
    gamma_b_cb: float
    gamma_t_st: float
    gamma_w_sw_hat: float
    gamma_e_cb_1: float
    gamma_e_cb_2: float


@dataclass(frozen=True)
class RateSet:
    """Achievable rates in bps/Hz (half spectral efficiency of the two phases)."""

    r_r: float          # effective covert-signal rate at the relay, phase 1
    r_b: float          # end-to-end rate of the covert signal at Bob
    r_e: float          # eavesdropper rate after combining
    r_w_sw: float
    r_t_st: float
    r_b_st: float
    r_r_sw: float
    r_r_cb: float
    r_b_cb: float
    sec: float          # secrecy rate, max(0, r_b - r_e)


@dataclass(frozen=True)
class AnalysisConstants:
    """Shorthand constants shared by the closed-form DEP/SOP expressions."""

    a: float            # sigma2 / (P_s lambda_SE)
    b: float            # sigma2 / (P_r lambda_RE)
    c: float            # sigma2 / (P_s lambda_SR)
    d: float            # sigma2 / (P_r lambda_RB)
    theta_cap: float    # min(alpha_w/alpha_b, beta_t/beta_b)
    gamma_bar_b: float  # 2^(2 r_b) - 1
    gamma_bar_w: float
    gamma_bar_t: float
    l1: float           # min(|h_SR|^2, |h_SW|^2)
    l2: float           # min(|h_RT|^2, |h_RB|^2)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def sample_channels(params: SystemParams, seed: int, stream_id: int = 0) -> ChannelRealization:
    """Draw one realization of all link gains plus Eve's sample aggregates.

    Gains are exponential with the configured means; tau_se and tau_re are
    sums of n_samples independent exponentials (a Gamma(N, lambda) draw).
    Deterministic for a fixed (seed, stream_id).
    """
    gen = stream(seed, stream_id)
    g = {link: float(exponential(gen, params.lam[link])) for link in LINKS}
    tau_se = float(gamma_sum(gen, params.n_samples, params.lam["SE"]))
    tau_re = float(gamma_sum(gen, params.n_samples, params.lam["RE"]))
    return ChannelRealization(g=g, tau_se=tau_se, tau_re=tau_re)


def compute_sinrs(params: SystemParams, alloc: PowerAllocation,
                  ch: ChannelRealization) -> SinrSet:
    """Evaluate all nine decoding SINRs for one channel realization."""
    ps, pr, s2 = params.p_s, params.relay_power(), params.sigma2
    g = ch.g
    return SinrSet(
        gamma_r_sw=alloc.alpha_w * ps * g["SR"] / (alloc.alpha_b * ps * g["SR"] + s2),
        gamma_r_cb=alloc.alpha_b * ps * g["SR"] / s2,
        gamma_w_sw=alloc.alpha_w * ps * g["SW"] / (alloc.alpha_b * ps * g["SW"] + s2),
        gamma_b_st=alloc.beta_t * pr * g["RB"] / (alloc.beta_b * pr * g["RB"] + s2),
        gamma_b_cb=alloc.beta_b * pr * g["RB"] / s2,
        gamma_t_st=alloc.beta_t * pr * g["RT"] / (alloc.beta_b * pr * g["RT"] + s2),
        gamma_w_sw_hat=ps * g["SW"] / (pr * g["RW"] + s2),
        gamma_e_cb_1=alloc.alpha_b * ps * g["SE"] / s2,
        gamma_e_cb_2=alloc.beta_b * pr * g["RE"] / (ps * g["SE"] + s2),
    )


def eve_combined(mode: CombinerMode, s: SinrSet) -> float:
    """Eavesdropper end-to-end SNR: max of the phases (SC) or their sum (MRC)."""
    if mode == "SC":
        return max(s.gamma_e_cb_1, s.gamma_e_cb_2)
    if mode == "MRC":
        return s.gamma_e_cb_1 + s.gamma_e_cb_2
    raise ValueError(f"unknown combining mode {mode!r}")


def half_rate(snr):
    """Rate of a half-duplex phase pair, 0.5 * log2(1 + snr)."""
    return 0.5 * np.log2(1.0 + snr)


def achievable_rates(params: SystemParams, alloc: PowerAllocation,
                     ch: ChannelRealization, mode: CombinerMode) -> RateSet:
    """All achievable rates plus the secrecy rate for one realization.

    The effective covert-signal SNR in each phase is the minimum of the
    SIC-stage public SINR and the covert SINR; end-to-end it is the minimum
    over both phases.
    """
    s = compute_sinrs(params, alloc, ch)
    gamma_r = min(s.gamma_r_sw, s.gamma_r_cb)
    gamma_b = min(s.gamma_b_st, s.gamma_b_cb)
    r_b = float(half_rate(min(gamma_r, gamma_b)))
    r_e = float(half_rate(eve_combined(mode, s)))
    return RateSet(
        r_r=float(half_rate(gamma_r)),
        r_b=r_b,
        r_e=r_e,
        r_w_sw=float(half_rate(s.gamma_w_sw)),
        r_t_st=float(half_rate(s.gamma_t_st)),
        r_b_st=float(half_rate(s.gamma_b_st)),
        r_r_sw=float(half_rate(s.gamma_r_sw)),
        r_r_cb=float(half_rate(s.gamma_r_cb)),
        r_b_cb=float(half_rate(s.gamma_b_cb)),
        sec=max(0.0, r_b - r_e),
    )


def derive_constants(params: SystemParams, alloc: PowerAllocation,
                     ch: ChannelRealization) -> AnalysisConstants:
    """Closed-form analysis constants for one parameter set and realization."""
    if alloc.alpha_b <= 0.0 or alloc.beta_b <= 0.0:
        raise ValueError("theta_cap is undefined for zero covert power shares")
    ps, pr, s2 = params.p_s, params.relay_power(), params.sigma2
    return AnalysisConstants(
        a=s2 / (ps * params.lam["SE"]),
        b=s2 / (pr * params.lam["RE"]),
        c=s2 / (ps * params.lam["SR"]),
        d=s2 / (pr * params.lam["RB"]),
        theta_cap=min(alloc.alpha_w / alloc.alpha_b, alloc.beta_t / alloc.beta_b),
        gamma_bar_b=2.0 ** (2.0 * params.r_b) - 1.0,
        gamma_bar_w=2.0 ** (2.0 * params.r_w) - 1.0,
        gamma_bar_t=2.0 ** (2.0 * params.r_t) - 1.0,
        l1=min(ch.g["SR"], ch.g["SW"]),
        l2=min(ch.g["RT"], ch.g["RB"]),
    )


# ---------------------------------------------------------------------------
# vectorized kernels shared with the Monte Carlo oracle
# ---------------------------------------------------------------------------

def end_to_end_rates_arrays(params: SystemParams, alloc_or_coeffs, gains: Mapping[str, np.ndarray],
                            mode: CombinerMode) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (r_b, r_e) over arrays of channel gains.

    alloc_or_coeffs is either a PowerAllocation or an (alpha_w, alpha_b,
    beta_t, beta_b) tuple of scalars/arrays broadcastable with the gains.
    Shares the exact same rate composition as achievable_rates.
    """
    if isinstance(alloc_or_coeffs, PowerAllocation):
        aw, ab = alloc_or_coeffs.alpha_w, alloc_or_coeffs.alpha_b
        bt, bb = alloc_or_coeffs.beta_t, alloc_or_coeffs.beta_b
    else:
        aw, ab, bt, bb = alloc_or_coeffs
    ps, pr, s2 = params.p_s, params.relay_power(), params.sigma2
    g_sr, g_rb = gains["SR"], gains["RB"]
    g_se, g_re = gains["SE"], gains["RE"]
    gamma_r = np.minimum(aw * ps * g_sr / (ab * ps * g_sr + s2), ab * ps * g_sr / s2)
    gamma_b = np.minimum(bt * pr * g_rb / (bb * pr * g_rb + s2), bb * pr * g_rb / s2)
    u = np.minimum(gamma_r, gamma_b)
    ge1 = ab * ps * g_se / s2
    ge2 = bb * pr * g_re / (ps * g_se + s2)
    v = np.maximum(ge1, ge2) if mode == "SC" else ge1 + ge2
    return half_rate(u), half_rate(v)
