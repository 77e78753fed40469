import pytest

from wolbachia_control import load_scenario
from wolbachia_control.model import ModelParameters, StateVector

# Rate constants and initial populations transcribed directly from the
# source tables, independently of the package's preset definitions.
TABLE_RATES = {
    "b_h": 0.00085 / 7,
    "mu_h": 0.00045 / 7,
    "alpha": 0.2,
    "gamma": 0.5 / 7,
    "theta": 1 / 7,
    "B": 1 / 7,
    "C_hv": 0.75,
    "C_vh": 0.375,
    "C_vh_w": 0.0,
    "sigma": 1.0,
    "phi": 13.0,
    "phi_w": 11.0,
    "v_w": 0.95,
    "v": 0.05,
    "psi": 1 / 8.75,
    "b_m": 0.5,
    "b_f": 0.5,
    "mu_a": 0.02,
    "mu_f": 1 / 17.5,
    "mu_f_w": 1 / 15.8,
    "mu_m": 1 / 10.5,
    "mu_m_w": 1 / 10.5,
}

TABLE_INITIAL = {
    "S_h": 50_000_000.0,
    "I_h": 15_000.0,
    "J_h": 1_500.0,
    "R_h": 5_000.0,
    "M_v": 10_000_000.0,
    "M_v_w": 0.0,
    "S_vf": 7_500_000.0,
    "S_vf_w": 0.0,
    "S_vfp": 2_500_000.0,
    "S_vfp_s": 0.0,
    "S_vfp_w": 0.0,
    "I_vf": 1_500_000.0,
    "I_vf_w": 0.0,
    "I_vfp": 500_000.0,
    "I_vfp_s": 0.0,
    "I_vfp_w": 0.0,
    "A": 25_000_000.0,
    "A_w": 0.0,
}


def make_params(**overrides) -> ModelParameters:
    values = dict(TABLE_RATES, K_a=333_000_000.0)
    values.update(overrides)
    return ModelParameters(**values)


def make_state(**overrides) -> StateVector:
    values = dict(TABLE_INITIAL)
    values.update(overrides)
    return StateVector(**values)


@pytest.fixture(scope="session")
def baseline_params():
    return make_params()


@pytest.fixture(scope="session")
def table_state():
    return make_state()


@pytest.fixture(scope="session")
def paper_baseline():
    return load_scenario("paper-baseline")


@pytest.fixture(scope="session")
def quezon_city():
    return load_scenario("quezon-city")


@pytest.fixture(scope="session")
def fast_scenario(quezon_city):
    """Short-horizon two-piece problem for optimizer tests."""
    from wolbachia_control import constant_capacity

    return quezon_city.with_updates(horizon=60, pieces=2,
                                    capacity=constant_capacity(1_000_000.0))
