import math

import numpy as np
import pytest

from conftest import mc_tol
from covert_noma.covertness import dep_phase1
from covert_noma.model import PowerAllocation, SystemParams
from covert_noma.montecarlo import mc_dep, mc_empirical_cdf, mc_sop
from covert_noma.secrecy_analysis import SopConfig, sop


class TestDeterminism:
    def test_dep_bit_identical(self, table1, alloc_82):
        a = mc_dep(table1, alloc_82, 3.0, 1, 300_000, seed=5)
        b = mc_dep(table1, alloc_82, 3.0, 1, 300_000, seed=5)
        assert a == b

    def test_sop_bit_identical(self, table1, alloc_64):
        a = mc_sop(table1, alloc_64, 0.2, "SC", 300_000, seed=6)
        b = mc_sop(table1, alloc_64, 0.2, "SC", 300_000, seed=6)
        assert a == b

    def test_seed_changes_result(self, table1, alloc_64):
        a = mc_sop(table1, alloc_64, 0.2, "SC", 100_000, seed=6)
        b = mc_sop(table1, alloc_64, 0.2, "SC", 100_000, seed=7)
        assert a.mean != b.mean


class TestMcDep:
    def test_threshold_at_noise_floor_is_certain(self, table1, alloc_82):
        est = mc_dep(table1, alloc_82, table1.sigma2, 1, 50_000, seed=1)
        assert est.mean == 1.0 and est.std_error == 0.0

    def test_full_public_power_phase1(self, table1):
        alloc = PowerAllocation(1.0, 0.0, 0.8, 0.2)
        est = mc_dep(table1, alloc, 4.0, 1, 50_000, seed=2)
        assert est.mean == 1.0

    def test_matches_closed_form(self, table1, alloc_82):
        omega = 10.0 ** 0.5
        est = mc_dep(table1, alloc_82, omega, 1, 1_000_000, seed=3)
        assert abs(dep_phase1(table1, alloc_82, omega).p_dep - est.mean) <= mc_tol(est)

    def test_estimates_are_probabilities(self, table1, alloc_82):
        for omega in (1.0, 2.0, 5.0, 20.0):
            for phase in (1, 2):
                est = mc_dep(table1, alloc_82, omega, phase, 30_000, seed=8)
                assert 0.0 <= est.mean <= 1.0

    def test_invalid_phase(self, table1, alloc_82):
        with pytest.raises(ValueError):
            mc_dep(table1, alloc_82, 2.0, 3, 100, seed=0)


class TestMcSop:
    def test_vanishing_eavesdropper(self, alloc_64):
        lam = {"SR": 1.0, "RB": 1.0, "SW": 0.5, "SE": 1e-9, "RT": 0.5, "RE": 1e-9,
               "RW": 0.5}
        params = SystemParams(p_s=10.0, p_r=5.0, lam=lam)
        est = mc_sop(params, alloc_64, 0.0, "SC", 200_000, seed=9)
        assert est.mean < 0.01

    def test_dominant_eavesdropper(self, alloc_64):
        lam = {"SR": 1.0, "RB": 1.0, "SW": 0.5, "SE": 500.0, "RT": 0.5, "RE": 500.0,
               "RW": 0.5}
        params = SystemParams(p_s=10.0, p_r=5.0, lam=lam)
        est = mc_sop(params, alloc_64, 0.2, "MRC", 200_000, seed=10)
        assert est.mean > 0.99

    def test_matches_quadrature(self, table1, alloc_64):
        est = mc_sop(table1, alloc_64, 0.2, "SC", 1_000_000, seed=11)
        analytic = sop(table1, alloc_64, 0.2, SopConfig(mode="SC"))
        assert abs(analytic - est.mean) <= max(mc_tol(est), 1e-3)


class TestMcEmpiricalCdf:
    def test_at_zero(self, table1, alloc_64):
        for qty in ("V_SC", "V_MRC", "U"):
            est = mc_empirical_cdf(qty, [0.0], table1, alloc_64, 20_000, seed=12)[0]
            assert est.mean == 0.0

    def test_u_above_ceiling(self, table1, alloc_64):
        est = mc_empirical_cdf("U", [1.5], table1, alloc_64, 20_000, seed=13)[0]
        assert est.mean == 1.0

    def test_grid_is_monotone(self, table1, alloc_64):
        grid = list(np.linspace(0.0, 3.0, 15))
        ests = mc_empirical_cdf("V_MRC", grid, table1, alloc_64, 100_000, seed=14)
        means = [e.mean for e in ests]
        assert all(b >= a for a, b in zip(means, means[1:]))

    def test_unknown_quantity(self, table1, alloc_64):
        with pytest.raises(ValueError):
            mc_empirical_cdf("W", [0.1], table1, alloc_64, 10, seed=0)


class TestErrorScaling:
    def test_stderr_shrinks_with_trials(self, table1, alloc_64):
        # doubling trials shrinks the std error by about 1/sqrt(2)
        small = mc_sop(table1, alloc_64, 0.2, "SC", 250_000, seed=15)
        big = mc_sop(table1, alloc_64, 0.2, "SC", 500_000, seed=16)
        ratio = big.std_error / small.std_error
        assert abs(ratio - 1.0 / math.sqrt(2.0)) < 0.2 / math.sqrt(2.0)
