import numpy as np
import pytest

from pdmp.models import morris_lecar as ml
from pdmp.models import telegraph as tg


@pytest.fixture(scope="session")
def ml_params():
    return ml.MlParams()


@pytest.fixture(scope="session")
def ml_x0(ml_params):
    return ml.default_initial_state(ml_params)


@pytest.fixture(scope="session")
def ml_jit(ml_params):
    return ml.jit_model(ml_params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def constant_rate_model(rate, rate_bound, flow=None):
    """One-mode model with intensity ``rate`` and a frozen coordinate."""
    from pdmp.core import Characteristics
    from pdmp.flows import exact_flow

    flow = flow or exact_flow(lambda theta, nu, t: nu)
    return Characteristics(1, lambda theta, nu: rate, lambda theta, nu: np.array([1.0]), rate_bound, flow)


ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """``record(n, ok, detail)``: store and print one acceptance line."""

    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
