import numpy as np
import pytest

import sddhopf as S


@pytest.fixture(scope="session")
def params():
    """Standard case-study parameter set, eps below the crossing."""
    return S.hes1_params(c=0.01, eps=6.0)


@pytest.fixture(scope="session")
def eq(params):
    return S.find_equilibrium(params)


@pytest.fixture(scope="session")
def hopf(params, eq):
    return S.solve_hopf(params.mu_m, params.mu_p, eq.f1 * eq.g1)


@pytest.fixture(scope="session")
def frame(eq, hopf):
    return S.critical_frame(eq, hopf)


@pytest.fixture(scope="session")
def eq_state(eq):
    return np.array([eq.r_star, eq.xi_star])
