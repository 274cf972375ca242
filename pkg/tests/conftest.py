import numpy as np
import pytest

from covert_noma.model import PowerAllocation, SystemParams


@pytest.fixture
def table1():
    """Baseline parameter set: P_s = 10 dBm, P_r = 0.5 P_s, N = 15."""
    return SystemParams(p_s=10.0, p_r=5.0)


@pytest.fixture
def alloc_82():
    return PowerAllocation(alpha_w=0.8, alpha_b=0.2, beta_t=0.8, beta_b=0.2)


@pytest.fixture
def alloc_64():
    return PowerAllocation(alpha_w=0.6, alpha_b=0.4, beta_t=0.6, beta_b=0.4)


def mc_tol(est, sigmas: float = 3.0, floor_extra: float = 0.0) -> float:
    """Monte Carlo comparison tolerance: 3 std errors with a rule-of-three
    floor for degenerate samples (all trials agreeing)."""
    return sigmas * max(est.std_error, 1.0 / est.trials) + floor_extra


@pytest.fixture
def rng():
    return np.random.default_rng(20240915)
