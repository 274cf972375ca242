"""Secrecy-rate maximization by successive convex approximation.

Each outer round linearizes the non-convex pieces of the secrecy objective
around the previous iterate (the two logarithm bounds and one bilinear-product
bound below) and solves the resulting small convex program with a log-barrier
interior-point method.  The surrogate objective never decreases across rounds
because every bound is tight at its local point, so the previous iterate stays
feasible for the next subproblem.

Two formulation switches exist for cross-checking:

* ``eve_direction``: the default "binding" keeps the eavesdropper auxiliary
  above every combining component, which makes the surrogate a true secrecy
  lower bound; "printed" uses the opposite inequality, under which the solver
  drives the auxiliary to zero and the eavesdropper drops out of the program.
* ``include_sic_caps``: the default also caps the covert auxiliary by the
  SIC-stage public-signal SINRs (their bilinear terms bounded by the product
  lemma), so the surrogate tracks the full end-to-end rate min; disabling it
  reproduces the covert-pair-only constraint set, which overshoots the covert
  power share whenever a public SINR is the end-to-end bottleneck.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .covert_opt import qos_lower_bounds, resolve_relay_power
from .model import (
    ChannelRealization,
    CombinerMode,
    PowerAllocation,
    SystemParams,
    achievable_rates,
    compute_sinrs,
    end_to_end_rates_arrays,
)

__all__ = [
    "ConvexSubproblem",
    "InfeasibleAllocation",
    "ScaState",
    "ScaStep",
    "ScaTrace",
    "assemble_subproblem",
    "bilinear_upper",
    "grid_oracle_secrecy",
    "log_bound_plain",
    "log_bound_shifted",
    "sca_maximize_secrecy",
    "solve_subproblem",
]

# variable layout of the subproblem vector
AW, AB, BT, BB, PHI, TB, TE, Q, P = range(9)
_NVAR = 9
_S = 0.5 / math.log(2.0)  # rate scale so phi is reported in bps/Hz


class InfeasibleAllocation(Exception):
    """Structured infeasibility: no allocation satisfies the constraints."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


# ---------------------------------------------------------------------------
# bounding lemmas
# ---------------------------------------------------------------------------

def log_bound_shifted(x: float, x_hat: float) -> float:
    """Concave lower bound of ln(1+x), tight at the local point x_hat."""
    if x <= 0.0 or x_hat <= 0.0:
        raise ValueError("log_bound_shifted requires positive arguments")
    return math.log1p(x_hat) + (x_hat * x_hat / (x_hat + 1.0)) * (1.0 / x_hat - 1.0 / x)


def log_bound_plain(x: float, x_hat: float) -> float:
    """Concave lower bound of ln(x), tight at the local point x_hat."""
    if x <= 0.0 or x_hat <= 0.0:
        raise ValueError("log_bound_plain requires positive arguments")
    return math.log(x_hat) + x_hat * (1.0 / x_hat - 1.0 / x)


def bilinear_upper(x: float, y: float, x_hat: float, y_hat: float) -> float:
    """Convex upper bound of x*y, tight when (x, y) = (x_hat, y_hat)."""
    if min(x, y, x_hat, y_hat) <= 0.0:
        raise ValueError("bilinear_upper requires positive arguments")
    return 0.5 * (y_hat / x_hat) * x * x + 0.5 * (x_hat / y_hat) * y * y


# ---------------------------------------------------------------------------
# state and subproblem containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaState:
    """One SCA iterate: allocation plus auxiliary variables.

    The auxiliaries double as the local points of the next round's bounds:
    t_b tracks the covert-signal SINR bottleneck, t_e the eavesdropper SNR,
    q approximates 1/(1+t_e) and p their product.
    """

    alloc: PowerAllocation
    t_b: float
    t_e: float
    q: float
    p: float
    phi: float
    iteration: int = 0

    def as_vector(self) -> np.ndarray:
        a = self.alloc
        return np.array([a.alpha_w, a.alpha_b, a.beta_t, a.beta_b,
                         self.phi, self.t_b, self.t_e, self.q, self.p])


@dataclass(frozen=True)
class LinearGroup:
    """Named block of linear inequality rows A x <= b."""

    name: str
    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class BoxBound:
    name: str
    index: int
    lower: float
    upper: float


class _PhiBound:
    """phi <= rate surrogate: convex since -1/t_b and -1/q are concave."""

    name = "phi_new"

    def __init__(self, t_hat_b: float, q_hat: float):
        self.c_b = t_hat_b * t_hat_b / (t_hat_b + 1.0)
        self.q_hat = q_hat
        self.const = _S * (math.log1p(t_hat_b) + self.c_b / t_hat_b
                           + math.log(q_hat) + 2.0)

    def in_domain(self, x) -> bool:
        return x[TB] > 0.0 and x[Q] > 0.0

    def value(self, x) -> float:
        return x[PHI] + _S * (self.c_b / x[TB] + self.q_hat / x[Q] + x[P]) - self.const

    def grad(self, x) -> np.ndarray:
        g = np.zeros(_NVAR)
        g[PHI] = 1.0
        g[TB] = -_S * self.c_b / x[TB] ** 2
        g[Q] = -_S * self.q_hat / x[Q] ** 2
        g[P] = _S
        return g

    def hess(self, x) -> np.ndarray:
        h = np.zeros((_NVAR, _NVAR))
        h[TB, TB] = 2.0 * _S * self.c_b / x[TB] ** 3
        h[Q, Q] = 2.0 * _S * self.q_hat / x[Q] ** 3
        return h


class _ProductBound:
    """p >= convex quadratic upper bound of q(1 + t_e)."""

    name = "t_q_new"

    def __init__(self, t_hat_e: float, q_hat: float):
        y_hat = 1.0 + t_hat_e
        self.cq = y_hat / q_hat
        self.ct = q_hat / y_hat

    def in_domain(self, x) -> bool:
        return True

    def value(self, x) -> float:
        return 0.5 * self.cq * x[Q] ** 2 + 0.5 * self.ct * (1.0 + x[TE]) ** 2 - x[P]

    def grad(self, x) -> np.ndarray:
        g = np.zeros(_NVAR)
        g[Q] = self.cq * x[Q]
        g[TE] = self.ct * (1.0 + x[TE])
        g[P] = -1.0
        return g

    def hess(self, x) -> np.ndarray:
        h = np.zeros((_NVAR, _NVAR))
        h[Q, Q] = self.cq
        h[TE, TE] = self.ct
        return h


class _SicCap:
    """t_b <= SIC-stage public SINR with the bilinear term product-bounded.

    From t_b (share P g + sigma2) <= pub P g, replacing t_b*share by its
    convex upper bound around (t_hat_b, share_hat).
    """

    def __init__(self, name: str, pg: float, sigma2: float, share_idx: int,
                 pub_idx: int, t_hat_b: float, share_hat: float):
        self.name = name
        self.pg = pg
        self.sigma2 = sigma2
        self.share_idx = share_idx
        self.pub_idx = pub_idx
        self.ct = share_hat / t_hat_b
        self.cs = t_hat_b / share_hat

    def in_domain(self, x) -> bool:
        return True

    def value(self, x) -> float:
        quad = 0.5 * self.ct * x[TB] ** 2 + 0.5 * self.cs * x[self.share_idx] ** 2
        return self.pg * quad + self.sigma2 * x[TB] - self.pg * x[self.pub_idx]

    def grad(self, x) -> np.ndarray:
        g = np.zeros(_NVAR)
        g[TB] = self.pg * self.ct * x[TB] + self.sigma2
        g[self.share_idx] = self.pg * self.cs * x[self.share_idx]
        g[self.pub_idx] = -self.pg
        return g

    def hess(self, x) -> np.ndarray:
        h = np.zeros((_NVAR, _NVAR))
        h[TB, TB] = self.pg * self.ct
        h[self.share_idx, self.share_idx] = self.pg * self.cs
        return h

    def cap_value(self, share, pub):
        """Largest feasible t_b given share/pub values (reduction oracle)."""
        rhs = self.pg * pub - 0.5 * self.pg * self.cs * share ** 2
        disc = self.sigma2 ** 2 + 2.0 * self.pg * self.ct * rhs
        return np.where(disc >= 0.0,
                        (-self.sigma2 + np.sqrt(np.maximum(disc, 0.0))) / (self.pg * self.ct),
                        -np.inf)


@dataclass
class ConvexSubproblem:
    """Convexified secrecy subproblem: maximize phi over 9 variables."""

    mode: CombinerMode
    eve_direction: str
    include_sic_caps: bool
    linear_groups: list
    boxes: list
    smooth: list
    x0: np.ndarray
    coeffs: dict

    def stacked_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """All linear rows (group rows plus box rows) as A x <= b."""
        blocks_a = [g.a for g in self.linear_groups]
        blocks_b = [g.b for g in self.linear_groups]
        for box in self.boxes:
            row_lo = np.zeros(_NVAR)
            row_lo[box.index] = -1.0
            row_hi = np.zeros(_NVAR)
            row_hi[box.index] = 1.0
            blocks_a.append(np.vstack([row_lo, row_hi]))
            blocks_b.append(np.array([-box.lower, box.upper]))
        return np.vstack(blocks_a), np.concatenate(blocks_b)

    def smooth_values(self, x) -> np.ndarray:
        return np.array([c.value(x) for c in self.smooth])

    def max_violation(self, x) -> float:
        a, b = self.stacked_rows()
        worst = float(np.max(a @ x - b))
        for c in self.smooth:
            if not c.in_domain(x):
                return math.inf
            worst = max(worst, c.value(x))
        return worst

    def counts(self) -> dict:
        return {
            "nonlinear": len(self.smooth),
            "linear_groups": len(self.linear_groups),
            "box": len(self.boxes),
        }


# ---------------------------------------------------------------------------
# subproblem assembly
# ---------------------------------------------------------------------------

def _channel_coeffs(params: SystemParams, ch: ChannelRealization) -> dict:
    ps, pr, s2 = params.p_s, params.relay_power(), params.sigma2
    return {
        "ps": ps, "pr": pr, "sigma2": s2,
        "k1": ps * ch.g["SR"] / s2,
        "k2": pr * ch.g["RB"] / s2,
        "k3": ps * ch.g["SE"] / s2,
        "k4": pr * ch.g["RE"],
        "s_e": ps * ch.g["SE"] + s2,
        "pg_sw": ps * ch.g["SR"],
        "pg_st": pr * ch.g["RB"],
        "l1": min(ch.g["SR"], ch.g["SW"]),
        "l2": min(ch.g["RT"], ch.g["RB"]),
        "gamma_w": 2.0 ** (2.0 * params.r_w) - 1.0,
        "gamma_t": 2.0 ** (2.0 * params.r_t) - 1.0,
    }


def _linear_groups(co: dict, mode: CombinerMode, eve_direction: str) -> list:
    groups = []

    def row(coeffs: dict, rhs: float) -> tuple[np.ndarray, float]:
        a = np.zeros(_NVAR)
        for idx, val in coeffs.items():
            a[idx] = val
        return a, rhs

    def group(name, *rows):
        a = np.vstack([r[0] for r in rows])
        b = np.array([r[1] for r in rows])
        groups.append(LinearGroup(name, a, b))

    ps, pr, s2 = co["ps"], co["pr"], co["sigma2"]
    gw, gt, l1, l2 = co["gamma_w"], co["gamma_t"], co["l1"], co["l2"]
    # QoS in exact two-variable form: gamma_bar (interferer + noise) <= signal
    group("condition_1", row({AW: -ps * l1, AB: gw * ps * l1}, -gw * s2))
    group("condition_2", row({BT: -pr * l2, BB: gt * pr * l2}, -gt * s2))
    group("problem_1d", row({AW: 1.0, AB: 1.0}, 1.0), row({BT: 1.0, BB: 1.0}, 1.0))
    group("t_bob_a", row({TB: 1.0, AB: -co["k1"]}, 0.0))
    group("t_bob_b", row({TB: 1.0, BB: -co["k2"]}, 0.0))
    sign = 1.0 if eve_direction == "binding" else -1.0
    if mode == "SC":
        group("t_eve_sc_a", row({AB: sign * co["k3"], TE: -sign}, 0.0))
        group("t_eve_sc_b", row({BB: sign * co["k4"], TE: -sign * co["s_e"]}, 0.0))
    else:
        group("t_eve_mrc",
              row({AB: sign * co["k3"], BB: sign * co["k4"] / co["s_e"], TE: -sign}, 0.0))
    return groups


_BOXES = [
    BoxBound("alpha_w", AW, 0.5, 1.0),
    BoxBound("alpha_b", AB, 0.0, 0.5),
    BoxBound("beta_t", BT, 0.5, 1.0),
    BoxBound("beta_b", BB, 0.0, 0.5),
]


def assemble_subproblem(state: ScaState, params: SystemParams, ch: ChannelRealization,
                        mode: CombinerMode, include_sic_caps: bool = True,
                        eve_direction: str = "binding") -> ConvexSubproblem:
    """Build the convex subproblem around the given strictly feasible state."""
    if eve_direction not in ("binding", "printed"):
        raise ValueError(f"unknown eve_direction {eve_direction!r}")
    params = resolve_relay_power(params, ch)
    co = _channel_coeffs(params, ch)
    co["lb_alpha"], co["lb_beta"] = qos_lower_bounds(params, ch)
    smooth = [_PhiBound(state.t_b, state.q), _ProductBound(state.t_e, state.q)]
    if include_sic_caps:
        smooth.append(_SicCap("t_sic_sw", co["pg_sw"], co["sigma2"], AB, AW,
                              state.t_b, state.alloc.alpha_b))
        smooth.append(_SicCap("t_sic_st", co["pg_st"], co["sigma2"], BB, BT,
                              state.t_b, state.alloc.beta_b))
    sp = ConvexSubproblem(
        mode=mode,
        eve_direction=eve_direction,
        include_sic_caps=include_sic_caps,
        linear_groups=_linear_groups(co, mode, eve_direction),
        boxes=list(_BOXES),
        smooth=smooth,
        x0=state.as_vector(),
        coeffs=co,
    )
    x0 = _strictify(sp, state)
    if sp.max_violation(x0) >= 0.0:
        raise ValueError("infeasible local point: the SCA state violates the subproblem")
    sp.x0 = x0
    return sp


def _strictify(sp: ConvexSubproblem, state: ScaState) -> np.ndarray:
    """Push the start point a hair inside constraints that are tight at the
    local point (where the surrogate touches the original constraint)."""
    x = state.as_vector().copy()
    co = sp.coeffs
    caps = [co["k1"] * x[AB], co["k2"] * x[BB]]
    if sp.include_sic_caps:
        for c in sp.smooth[2:]:
            root = float(c.cap_value(x[c.share_idx], x[c.pub_idx]))
            caps.append(root)
    x[TB] = min(x[TB], (1.0 - 1e-9) * min(caps))
    if sp.eve_direction == "binding":
        if sp.mode == "SC":
            floor = max(co["k3"] * x[AB], co["k4"] * x[BB] / co["s_e"])
        else:
            floor = co["k3"] * x[AB] + co["k4"] * x[BB] / co["s_e"]
        x[TE] = max(x[TE], (1.0 + 1e-9) * floor + 1e-15)
    prod = sp.smooth[1]
    x[P] = max(x[P], (1.0 + 1e-9) * (0.5 * prod.cq * x[Q] ** 2
                                     + 0.5 * prod.ct * (1.0 + x[TE]) ** 2))
    phi_cap = sp.smooth[0]
    rhs = phi_cap.const - _S * (phi_cap.c_b / x[TB] + phi_cap.q_hat / x[Q] + x[P])
    x[PHI] = min(x[PHI], rhs - 1e-9 * max(1.0, abs(rhs)))
    return x


# ---------------------------------------------------------------------------
# log-barrier interior-point solver
# ---------------------------------------------------------------------------

_OBJECTIVE = np.zeros(_NVAR)
_OBJECTIVE[PHI] = -1.0  # minimize -phi


def _barrier_value(x, t, a_rows, b_rows, smooth):
    slack = b_rows - a_rows @ x
    if np.any(slack <= 0.0):
        return None
    val = t * float(_OBJECTIVE @ x) - float(np.sum(np.log(slack)))
    for c in smooth:
        if not c.in_domain(x):
            return None
        g = c.value(x)
        if g >= 0.0:
            return None
        val -= math.log(-g)
    return val


def _centering(x, t, a_rows, b_rows, smooth, max_steps=80):
    for _ in range(max_steps):
        slack = b_rows - a_rows @ x
        inv = 1.0 / slack
        grad = t * _OBJECTIVE + a_rows.T @ inv
        hess = (a_rows * (inv ** 2)[:, None]).T @ a_rows
        for c in smooth:
            gv = c.value(x)
            gg = c.grad(x)
            s = -gv
            grad = grad + gg / s
            hess = hess + np.outer(gg, gg) / (s * s) + c.hess(x) / s
        # Jacobi-scale the Newton system: the barrier Hessian diagonal spans
        # many orders of magnitude, and an absolute ridge would swamp the
        # small-curvature directions
        diag = np.maximum(np.diag(hess), 1e-300)
        scale = 1.0 / np.sqrt(diag)
        hs = hess * scale[:, None] * scale[None, :]
        gs = grad * scale
        ridge = 1e-14
        step = None
        for _ in range(10):
            try:
                ys = np.linalg.solve(hs + ridge * np.eye(_NVAR), -gs)
            except np.linalg.LinAlgError:
                ys = None
            if ys is not None and float(-gs @ ys) > 0.0:
                step = ys * scale
                break
            ridge *= 100.0
        if step is None:
            break
        dec2 = float(-grad @ step)
        if dec2 / 2.0 <= 1e-13:
            break
        # fraction to boundary on the linear rows, then backtracking
        a_step = a_rows @ step
        pos = a_step > 0.0
        smax = 1.0
        if np.any(pos):
            smax = min(1.0, 0.99 * float(np.min(slack[pos] / a_step[pos])))
        base = _barrier_value(x, t, a_rows, b_rows, smooth)
        slope = float(grad @ step)
        size = smax
        accepted = False
        while size > 1e-14:
            cand = x + size * step
            val = _barrier_value(cand, t, a_rows, b_rows, smooth)
            if val is not None and val <= base + 0.25 * size * slope:
                x = cand
                accepted = True
                break
            size *= 0.5
        if not accepted:
            break
    return x


def _solve_barrier(sp: ConvexSubproblem, tol: float) -> tuple[np.ndarray, dict]:
    a_rows, b_rows = sp.stacked_rows()
    m = a_rows.shape[0] + len(sp.smooth)
    x = sp.x0.copy()
    if sp.max_violation(x) >= 0.0:
        raise ValueError("barrier solver requires a strictly feasible start")
    t = 1.0
    outer_objectives = []
    iterations = 0
    while True:
        x = _centering(x, t, a_rows, b_rows, sp.smooth)
        outer_objectives.append(float(x[PHI]))
        iterations += 1
        if m / t <= tol:
            break
        t *= 10.0
        if iterations > 60:
            warnings.warn("barrier solver hit its outer-iteration cap",
                          RuntimeWarning, stacklevel=2)
            break
    # the start point is feasible for its own subproblem, so a solve that
    # lands below it has stalled; fall back rather than regress
    if x[PHI] < sp.x0[PHI]:
        x = sp.x0.copy()
    # KKT residual from the barrier multiplier estimates, normalized by the
    # largest dual-term magnitude so it is meaningful across problem scales
    slack = b_rows - a_rows @ x
    lam = 1.0 / (t * slack)
    station = _OBJECTIVE + a_rows.T @ lam
    norm = max(1.0, float(np.max(np.abs(a_rows) * lam[:, None])))
    for c in sp.smooth:
        term = c.grad(x) / (t * (-c.value(x)))
        station = station + term
        norm = max(norm, float(np.max(np.abs(term))))
    info = {
        "kkt_residual": max(float(np.max(np.abs(station))) / norm, m / t),
        "duality_gap": m / t,
        "barrier_t": t,
        "outer_objectives": outer_objectives,
        "converged": m / t <= tol,
    }
    return x, info


def solve_subproblem(sp: ConvexSubproblem, tol: float = 1e-8) -> ScaState:
    """Solve the convex subproblem to the given duality-gap tolerance."""
    x, info = _solve_barrier(sp, tol)
    if not info["converged"]:
        warnings.warn(
            f"subproblem returned best iterate with duality gap {info['duality_gap']:.2e}",
            RuntimeWarning, stacklevel=2)
    alloc = PowerAllocation(alpha_w=float(x[AW]), alpha_b=float(x[AB]),
                            beta_t=float(x[BT]), beta_b=float(x[BB]))
    return ScaState(alloc=alloc, t_b=float(x[TB]), t_e=float(x[TE]),
                    q=float(x[Q]), p=float(x[P]), phi=float(x[PHI]))


# ---------------------------------------------------------------------------
# SCA driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaStep:
    state: ScaState
    surrogate: float
    exact_secrecy: float


@dataclass(frozen=True)
class ScaTrace:
    steps: list
    converged: bool
    mode: CombinerMode

    @property
    def iterations(self) -> int:
        return len(self.steps)


def _zero_secrecy_certified(params: SystemParams, ch: ChannelRealization) -> bool:
    """True when the secrecy rate is zero for every feasible allocation.

    The first-phase Eve SNR scales as alpha_b * P_s * g_SE and the covert
    first-hop SNR as alpha_b * P_s * g_SR, so g_SE >= g_SR makes the
    eavesdropper dominate pointwise; the analogous second-phase comparison
    includes Eve's jamming denominator.
    """
    if ch.g["SE"] >= ch.g["SR"]:
        return True
    s2 = params.sigma2
    return ch.g["RE"] * s2 >= ch.g["RB"] * (params.p_s * ch.g["SE"] + s2)


def _initial_state(params: SystemParams, ch: ChannelRealization, mode: CombinerMode,
                   include_sic_caps: bool, eve_direction: str) -> ScaState:
    lb_alpha, lb_beta = qos_lower_bounds(params, ch)
    margin = 0.01
    while (max(lb_alpha, 0.5) + margin >= 1.0 - 1e-6
           or max(lb_beta, 0.5) + margin >= 1.0 - 1e-6):
        margin *= 0.5
        if margin < 1e-9:
            raise InfeasibleAllocation("QoS bounds exceed the power budget")
    aw0 = max(lb_alpha, 0.5) + margin
    bt0 = max(lb_beta, 0.5) + margin
    # leave the budget rows a hair slack so the barrier start is interior
    slack = 1e-7
    alloc = PowerAllocation(alpha_w=aw0, alpha_b=1.0 - aw0 - slack,
                            beta_t=bt0, beta_b=1.0 - bt0 - slack)
    s = compute_sinrs(params, alloc, ch)
    caps = [s.gamma_r_cb, s.gamma_b_cb]
    if include_sic_caps:
        caps += [s.gamma_r_sw, s.gamma_b_st]
    t_b = 0.999 * min(caps)
    if t_b <= 0.0:
        raise InfeasibleAllocation("a legitimate channel gain is zero")
    if eve_direction == "binding":
        if mode == "SC":
            floor = max(s.gamma_e_cb_1, s.gamma_e_cb_2)
        else:
            floor = s.gamma_e_cb_1 + s.gamma_e_cb_2
        t_e = 1.001 * floor + 1e-12
    else:
        t_e = 1e-12
    q = 1.0 / (1.0 + t_e)
    p = q * (1.0 + t_e) * (1.0 + 1e-6)
    phi = _S * (math.log1p(t_b) + math.log(q) - p + 1.0) - 1e-9
    return ScaState(alloc=alloc, t_b=t_b, t_e=t_e, q=q, p=p, phi=phi, iteration=0)


def sca_maximize_secrecy(params: SystemParams, ch: ChannelRealization,
                         mode: CombinerMode, eps: float = 1e-2,
                         max_iterations: int = 60, tol: float = 1e-8,
                         abs_eps: float = 1e-4,
                         include_sic_caps: bool = True,
                         eve_direction: str = "binding") -> tuple[ScaTrace, float]:
    """Run the SCA loop until the surrogate's relative change drops below eps.

    A relative-change rule alone never fires on zero-secrecy instances, where
    the surrogate climbs geometrically towards 0, so changes below abs_eps
    (in bps/Hz) also terminate; the induced objective error is bounded by a
    small multiple of abs_eps.

    Returns the iteration trace plus the exact secrecy rate achieved by the
    final allocation (evaluated on the true rate expressions, not the
    surrogate).
    """
    params = resolve_relay_power(params, ch)
    if params.relay_power() <= 0.0:
        raise InfeasibleAllocation("relay power cap is zero: second-phase QoS infeasible")
    state = _initial_state(params, ch, mode, include_sic_caps, eve_direction)
    if _zero_secrecy_certified(params, ch):
        # the eavesdropper SNR dominates a covert-hop SNR for every
        # allocation, so the exact secrecy rate is identically zero and the
        # surrogate would only crawl towards it
        step = ScaStep(state=state, surrogate=state.phi, exact_secrecy=0.0)
        return ScaTrace(steps=[step], converged=True, mode=mode), 0.0
    steps: list[ScaStep] = []
    converged = False
    prev_phi = None
    for k in range(1, max_iterations + 1):
        sp = assemble_subproblem(state, params, ch, mode,
                                 include_sic_caps=include_sic_caps,
                                 eve_direction=eve_direction)
        state = replace(solve_subproblem(sp, tol), iteration=k)
        exact = achievable_rates(params, state.alloc, ch, mode).sec
        steps.append(ScaStep(state=state, surrogate=state.phi, exact_secrecy=exact))
        if prev_phi is not None and abs(state.phi - prev_phi) <= max(
                eps * abs(prev_phi), abs_eps):
            converged = True
            break
        prev_phi = state.phi
    trace = ScaTrace(steps=steps, converged=converged, mode=mode)
    return trace, steps[-1].exact_secrecy


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def grid_oracle_secrecy(params: SystemParams, ch: ChannelRealization,
                        mode: CombinerMode,
                        resolution: int = 200) -> tuple[PowerAllocation, float]:
    """Exhaustive search over (alpha_b, beta_b) with full budgets.

    Evaluates the exact secrecy rate on a resolution x resolution grid under
    the QoS, budget and ordering constraints; the validation reference for
    the SCA path.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    params = resolve_relay_power(params, ch)
    if params.relay_power() <= 0.0:
        raise InfeasibleAllocation("relay power cap is zero: second-phase QoS infeasible")
    lb_alpha, lb_beta = qos_lower_bounds(params, ch)
    ab_max = min(0.5 - 1e-9, 1.0 - lb_alpha)
    bb_max = min(0.5 - 1e-9, 1.0 - lb_beta)
    if ab_max <= 0.0 or bb_max <= 0.0:
        raise InfeasibleAllocation("QoS bounds exceed the power budget")

    def sweep(lo_a, hi_a, lo_b, hi_b):
        ab = np.linspace(lo_a, hi_a, resolution)[:, None]
        bb = np.linspace(lo_b, hi_b, resolution)[None, :]
        rate_b, rate_e = end_to_end_rates_arrays(
            params, (1.0 - ab, ab, 1.0 - bb, bb), ch.g, mode)
        sec = np.maximum(0.0, rate_b - rate_e)
        i, j = np.unravel_index(int(np.argmax(sec)), sec.shape)
        return float(ab[i, 0]), float(bb[0, j]), float(sec[i, j])

    # First pass over the whole box, then a zoom two grid cells wide around
    # the incumbent: with an adaptive relay power the optimum beta_b can sit
    # well below the first uniform grid line.
    best_ab, best_bb, best = sweep(1e-9, ab_max, 1e-9, bb_max)
    da = ab_max / (resolution - 1)
    db = bb_max / (resolution - 1)
    ab2, bb2, sec2 = sweep(max(1e-9, best_ab - 2 * da), min(ab_max, best_ab + 2 * da),
                           max(1e-9, best_bb - 2 * db), min(bb_max, best_bb + 2 * db))
    if sec2 > best:
        best_ab, best_bb, best = ab2, bb2, sec2
    alloc = PowerAllocation(alpha_w=1.0 - best_ab, alpha_b=best_ab,
                            beta_t=1.0 - best_bb, beta_b=best_bb)
    return alloc, best


def _reduction_oracle(sp: ConvexSubproblem, resolution: int = 121,
                      refinements: int = 4) -> float:
    """Independent 2-D reference for the barrier solver.

    With budgets tight and t_b / t_e at their binding values, the optimal
    (q, p) follow in closed form (q* is the stationary point of the
    surrogate's q-terms), reducing the subproblem to a search over
    (alpha_b, beta_b); refined by windowed zooming around the incumbent.
    """
    co = sp.coeffs
    phi_cap: _PhiBound = sp.smooth[0]
    prod: _ProductBound = sp.smooth[1]
    q_hat = phi_cap.q_hat
    y_hat = prod.cq * q_hat  # equals 1 + t_hat_e
    q_star = (q_hat * q_hat / y_hat) ** (1.0 / 3.0)
    ab_hi = min(0.5, 1.0 - co["lb_alpha"])
    bb_hi = min(0.5, 1.0 - co["lb_beta"])
    lo_a, hi_a, lo_b, hi_b = 1e-9, ab_hi, 1e-9, bb_hi
    best = -math.inf
    for _ in range(refinements):
        ab = np.linspace(lo_a, hi_a, resolution)[:, None]
        bb = np.linspace(lo_b, hi_b, resolution)[None, :]
        t_b = np.minimum(co["k1"] * ab, co["k2"] * bb)
        if sp.include_sic_caps:
            for cap in sp.smooth[2:]:
                share = ab if cap.share_idx == AB else bb
                pub = 1.0 - share
                t_b = np.minimum(t_b, cap.cap_value(share, pub))
        if sp.eve_direction == "binding":
            if sp.mode == "SC":
                t_e = np.maximum(co["k3"] * ab, co["k4"] * bb / co["s_e"])
            else:
                t_e = co["k3"] * ab + co["k4"] * bb / co["s_e"]
        else:
            t_e = np.zeros_like(t_b)
        t_e = np.broadcast_to(t_e, t_b.shape)
        p = 0.5 * prod.cq * q_star ** 2 + 0.5 * prod.ct * (1.0 + t_e) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = phi_cap.const - _S * (phi_cap.c_b / t_b + q_hat / q_star + p)
        phi = np.where(t_b > 0.0, phi, -np.inf)
        idx = int(np.argmax(phi))
        i, j = np.unravel_index(idx, phi.shape)
        best = max(best, float(phi[i, j]))
        # zoom into a window two grid cells wide around the incumbent
        da = (hi_a - lo_a) / (resolution - 1)
        db = (hi_b - lo_b) / (resolution - 1)
        lo_a = max(1e-9, float(ab[i, 0]) - 2 * da)
        hi_a = min(ab_hi, float(ab[i, 0]) + 2 * da)
        lo_b = max(1e-9, float(bb[0, j]) - 2 * db)
        hi_b = min(bb_hi, float(bb[0, j]) + 2 * db)
    return best
