import math

import numpy as np
import pytest

from covert_noma.covert_opt import resolve_relay_power
from covert_noma.model import (
    ADAPTIVE,
    ChannelRealization,
    SystemParams,
    achievable_rates,
    sample_channels,
)
from covert_noma.secrecy_opt import (
    InfeasibleAllocation,
    _initial_state,
    _reduction_oracle,
    _solve_barrier,
    PHI,
    assemble_subproblem,
    bilinear_upper,
    grid_oracle_secrecy,
    log_bound_plain,
    log_bound_shifted,
    sca_maximize_secrecy,
    solve_subproblem,
)

TABLE1_SCA = dict(p_s=100.0, p_r=ADAPTIVE, r_w=0.25, r_t=0.25, r_w_hat=0.25)


def _channel(g, **kw):
    gains = {"SR": 1.2, "RB": 0.9, "SW": 0.8, "SE": 0.2, "RT": 0.6, "RE": 0.25,
             "RW": 0.5}
    gains.update(g)
    return ChannelRealization(g=gains, tau_se=kw.get("tau_se", 1.0),
                              tau_re=kw.get("tau_re", 1.0))


class TestLemmaBounds:
    def test_shifted_tight_at_local_point(self):
        assert log_bound_shifted(2.0, 2.0) == pytest.approx(math.log(3.0), rel=1e-14)

    def test_shifted_is_lower_bound(self):
        assert log_bound_shifted(5.0, 1.0) <= math.log(6.0)

    def test_shifted_property_sampling(self, rng):
        xs = rng.uniform(1e-3, 1e3, (10_000, 2))
        for x, x_hat in xs:
            assert log_bound_shifted(x, x_hat) <= math.log1p(x) + 1e-12

    def test_plain_tight_at_local_point(self):
        assert log_bound_plain(3.7, 3.7) == pytest.approx(math.log(3.7), rel=1e-14)

    def test_plain_known_gap(self):
        assert log_bound_plain(math.e, 1.0) == pytest.approx(1.0 - 1.0 / math.e,
                                                             rel=1e-12)
        assert log_bound_plain(math.e, 1.0) <= 1.0

    def test_plain_property_sampling(self, rng):
        xs = rng.uniform(1e-3, 1e3, (10_000, 2))
        for x, x_hat in xs:
            assert log_bound_plain(x, x_hat) <= math.log(x) + 1e-12

    def test_bilinear_tight_at_local_point(self):
        assert bilinear_upper(2.0, 3.0, 2.0, 3.0) == pytest.approx(6.0, rel=1e-14)

    def test_bilinear_substitution(self):
        assert bilinear_upper(2.0, 3.0, 1.0, 1.0) == pytest.approx(6.5, rel=1e-14)
        assert bilinear_upper(2.0, 3.0, 1.0, 1.0) >= 6.0

    def test_bilinear_property_sampling(self, rng):
        quads = rng.uniform(1e-3, 1e3, (10_000, 4))
        for x, y, xh, yh in quads:
            assert bilinear_upper(x, y, xh, yh) >= x * y - 1e-9

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            log_bound_shifted(-1.0, 1.0)
        with pytest.raises(ValueError):
            log_bound_plain(1.0, 0.0)
        with pytest.raises(ValueError):
            bilinear_upper(1.0, 1.0, -1.0, 1.0)


class TestAssemble:
    def _setup(self, mode="SC", **flags):
        params = SystemParams(**TABLE1_SCA)
        ch = _channel({})
        params = resolve_relay_power(params, ch)
        state = _initial_state(params, ch, mode, flags.get("include_sic_caps", True),
                               flags.get("eve_direction", "binding"))
        sp = assemble_subproblem(state, params, ch, mode, **flags)
        return params, ch, state, sp

    def test_counts_printed_formulation(self):
        # the printed problem: 2 nonlinear + 7 (SC) / 6 (MRC) linear groups + 4 box
        for mode, linear in (("SC", 7), ("MRC", 6)):
            _, _, _, sp = self._setup(mode, include_sic_caps=False)
            counts = sp.counts()
            assert counts == {"nonlinear": 2, "linear_groups": linear, "box": 4}

    def test_counts_default_formulation(self):
        # the default adds the two convexified SIC-stage caps
        for mode, linear in (("SC", 7), ("MRC", 6)):
            _, _, _, sp = self._setup(mode)
            counts = sp.counts()
            assert counts == {"nonlinear": 4, "linear_groups": linear, "box": 4}

    def test_bounds_tight_at_local_point(self):
        _, _, state, sp = self._setup()
        x = state.as_vector()
        phi_cap = sp.smooth[0]
        # the surrogate RHS at the local point equals the unapproximated value
        rhs = phi_cap.const - (0.5 / math.log(2.0)) * (
            phi_cap.c_b / state.t_b + phi_cap.q_hat / state.q + state.p)
        exact = (0.5 / math.log(2.0)) * (
            math.log1p(state.t_b) + math.log(state.q) - state.p + 1.0)
        assert rhs == pytest.approx(exact, rel=1e-12)
        prod = sp.smooth[1]
        quad = 0.5 * prod.cq * state.q ** 2 + 0.5 * prod.ct * (1.0 + state.t_e) ** 2
        assert quad == pytest.approx(state.q * (1.0 + state.t_e), rel=1e-12)

    def test_start_point_strictly_feasible(self):
        for mode in ("SC", "MRC"):
            _, _, _, sp = self._setup(mode)
            assert sp.max_violation(sp.x0) < 0.0

    def test_infeasible_local_point_rejected(self):
        params, ch, state, _ = self._setup()
        from dataclasses import replace
        bad = replace(state, t_b=state.t_b * 100.0)  # violates the covert caps
        with pytest.raises(ValueError):
            assemble_subproblem(bad, params, ch, "SC")


class TestSolveSubproblem:
    def test_zero_eve_gains(self):
        # with no eavesdropper the solver drives t_e -> 0, q -> 1, p -> 1
        params = SystemParams(**TABLE1_SCA)
        ch = _channel({"SE": 0.0, "RE": 0.0})
        params = resolve_relay_power(params, ch)
        state = _initial_state(params, ch, "SC", True, "binding")
        for _ in range(8):
            sp = assemble_subproblem(state, params, ch, "SC")
            state = solve_subproblem(sp)
        assert state.t_e == pytest.approx(0.0, abs=1e-4)
        assert state.q == pytest.approx(1.0, abs=1e-3)
        assert state.p == pytest.approx(1.0, abs=1e-3)

    def test_matches_reduction_oracle(self):
        params = SystemParams(**TABLE1_SCA)
        for k in range(4):
            ch = sample_channels(params, seed=21, stream_id=k)
            resolved = resolve_relay_power(params, ch)
            if resolved.relay_power() <= 0.0:
                continue
            state = _initial_state(resolved, ch, "SC", True, "binding")
            for _ in range(2):
                sp = assemble_subproblem(state, resolved, ch, "SC")
                state = solve_subproblem(sp)
            sp = assemble_subproblem(state, resolved, ch, "SC")
            solution = solve_subproblem(sp)
            ref = _reduction_oracle(sp)
            assert solution.phi == pytest.approx(ref, abs=1e-6)

    def test_kkt_residual_and_gap(self):
        params = SystemParams(**TABLE1_SCA)
        ch = _channel({})
        resolved = resolve_relay_power(params, ch)
        state = _initial_state(resolved, ch, "MRC", True, "binding")
        sp = assemble_subproblem(state, resolved, ch, "MRC")
        x, info = _solve_barrier(sp, tol=1e-8)
        assert info["converged"]
        assert info["duality_gap"] <= 1e-8
        assert info["kkt_residual"] <= 1e-6

    def test_barrier_path_monotone(self):
        params = SystemParams(**TABLE1_SCA)
        ch = _channel({})
        resolved = resolve_relay_power(params, ch)
        state = _initial_state(resolved, ch, "SC", True, "binding")
        sp = assemble_subproblem(state, resolved, ch, "SC")
        _, info = _solve_barrier(sp, tol=1e-8)
        path = info["outer_objectives"]
        assert all(b >= a - 1e-7 for a, b in zip(path, path[1:]))


class TestScaDriver:
    def test_zero_eavesdropper_recovers_bob_rate(self):
        params = SystemParams(**TABLE1_SCA)
        ch = _channel({"SE": 1e-15, "RE": 1e-15})
        trace, rate = sca_maximize_secrecy(params, ch, "SC")
        resolved = resolve_relay_power(params, ch)
        final = trace.steps[-1].state.alloc
        rates = achievable_rates(resolved, final, ch, "SC")
        assert rate == pytest.approx(rates.r_b, abs=1e-9)

    def test_surrogate_monotone_and_convergent(self):
        params = SystemParams(**TABLE1_SCA)
        for k in range(10):
            ch = sample_channels(params, seed=22, stream_id=k)
            for mode in ("SC", "MRC"):
                try:
                    trace, _ = sca_maximize_secrecy(params, ch, mode)
                except InfeasibleAllocation:
                    continue
                phis = [s.surrogate for s in trace.steps]
                assert all(b >= a - 1e-7 for a, b in zip(phis, phis[1:]))
                assert trace.converged
                assert trace.iterations <= 30

    def test_close_to_grid_oracle(self):
        params = SystemParams(**TABLE1_SCA)
        for k in range(6):
            ch = sample_channels(params, seed=23, stream_id=k)
            for mode in ("SC", "MRC"):
                try:
                    trace, rate = sca_maximize_secrecy(params, ch, mode)
                except InfeasibleAllocation:
                    continue
                _, oracle = grid_oracle_secrecy(params, ch, mode)
                assert rate >= oracle - max(0.05 * oracle, 0.01)

    def test_solution_feasible(self):
        params = SystemParams(**TABLE1_SCA)
        for k in range(6):
            ch = sample_channels(params, seed=24, stream_id=k)
            try:
                trace, _ = sca_maximize_secrecy(params, ch, "SC")
            except InfeasibleAllocation:
                continue
            resolved = resolve_relay_power(params, ch)
            alloc = trace.steps[-1].state.alloc
            rates = achievable_rates(resolved, alloc, ch, "SC")
            assert min(rates.r_r_sw, rates.r_w_sw) >= params.r_w - 1e-6
            assert min(rates.r_b_st, rates.r_t_st) >= params.r_t - 1e-6
            assert alloc.alpha_w + alloc.alpha_b <= 1.0 + 1e-9
            assert alloc.beta_t + alloc.beta_b <= 1.0 + 1e-9

    def test_infeasible_qos_raises(self):
        params = SystemParams(**{**TABLE1_SCA, "r_t": 8.0})
        ch = _channel({"RT": 1e-6})
        with pytest.raises(InfeasibleAllocation):
            sca_maximize_secrecy(params, ch, "SC")

    def test_zero_relay_cap_raises(self):
        params = SystemParams(**{**TABLE1_SCA, "r_w_hat": 6.0})
        ch = _channel({"SW": 1e-6})
        with pytest.raises(InfeasibleAllocation):
            sca_maximize_secrecy(params, ch, "SC")

    def test_printed_eve_direction_ignores_eavesdropper(self):
        # under the printed inequality the solver zeroes the Eve auxiliary
        params = SystemParams(**TABLE1_SCA)
        ch = _channel({})
        trace, _ = sca_maximize_secrecy(params, ch, "SC", eve_direction="printed")
        assert trace.steps[-1].state.t_e < 1e-4


class TestGridOracle:
    def test_degenerate_resolution(self):
        params = SystemParams(**TABLE1_SCA)
        ch = _channel({})
        alloc, rate = grid_oracle_secrecy(params, ch, "SC", resolution=2)
        assert rate >= 0.0

    def test_sc_dominates_mrc(self):
        params = SystemParams(**TABLE1_SCA)
        for k in range(8):
            ch = sample_channels(params, seed=25, stream_id=k)
            try:
                _, sc = grid_oracle_secrecy(params, ch, "SC")
                _, mrc = grid_oracle_secrecy(params, ch, "MRC")
            except InfeasibleAllocation:
                continue
            assert sc >= mrc - 1e-12

    def test_refinement_stability(self):
        params = SystemParams(**TABLE1_SCA)
        for k in range(4):
            ch = sample_channels(params, seed=26, stream_id=k)
            try:
                _, lo = grid_oracle_secrecy(params, ch, "SC", resolution=200)
                _, hi = grid_oracle_secrecy(params, ch, "SC", resolution=400)
            except InfeasibleAllocation:
                continue
            assert abs(lo - hi) <= 0.01

    def test_rejects_tiny_resolution(self):
        with pytest.raises(ValueError):
            grid_oracle_secrecy(SystemParams(**TABLE1_SCA), _channel({}), "SC",
                                resolution=1)
