import numpy as np
import pytest

from jamlab import collision, jamiton, model
from jamlab.model import ModelParams


@pytest.fixture(scope="session")
def p():
    return ModelParams()


@pytest.fixture(scope="session")
def violation(p):
    return model.scc_violation_interval(p)


@pytest.fixture(scope="session")
def sonic433(p):
    return jamiton.sonic_data(0.433 * p.rho_max, p)


@pytest.fixture(scope="session")
def spec433(sonic433):
    return jamiton.make_spec(sonic433, 26.0)


@pytest.fixture(scope="session")
def profile433(spec433):
    return jamiton.integrate_profile(spec433, 2048)


@pytest.fixture(scope="session")
def test_jamiton(p):
    rho_s_test, v_minus_test = collision.choose_test_jamiton(p)
    return rho_s_test, v_minus_test


@pytest.fixture(scope="session")
def sample_densities(violation):
    lo, hi = violation
    width = hi - lo
    return np.linspace(lo + 0.02 * width, hi - 0.02 * width, 50)


@pytest.fixture(scope="session")
def fig9_specs(p):
    son_a = jamiton.sonic_data(0.425 * p.rho_max, p)
    son_b = jamiton.sonic_data(0.443 * p.rho_max, p)
    return jamiton.make_spec(son_a, 25.0), jamiton.make_spec(son_b, 25.0)


@pytest.fixture(scope="session")
def fig9_record(p, fig9_specs):
    spec_a, spec_b = fig9_specs
    return collision.run_collision(spec_a, spec_b, p, n_cells=160)
