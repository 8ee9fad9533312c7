import math

import numpy as np
import pytest

from pdmp.errors import InvalidArgument, NumericalFailure
from pdmp.flows import (FlowCursor, euler_error_constants, euler_polygon, exact_flow, flow_eval,
                        reference_flow, reference_solve)

decay = lambda theta, nu: -nu
decay_exact = exact_flow(lambda theta, nu, t: nu * math.exp(-t), decay)


@pytest.mark.parametrize("scheme", [
    exact_flow(lambda theta, nu, t: nu),
    euler_polygon(lambda theta, nu: 0.0, 0.1),
    reference_flow(lambda theta, nu: 0.0, 0.01),
])
def test_zero_field_is_constant(scheme):
    assert flow_eval(scheme, 0, 3.5, 2.7) == 3.5


def test_hand_evaluated_polygon():
    # y1 = 0.9, y2 = 0.81, then half a cell of slope -0.81
    assert flow_eval(euler_polygon(decay, 0.1), 0, 1.0, 0.25) == pytest.approx(0.7695, abs=1e-15)


def test_polygon_error_within_lipschitz_bound():
    eu = flow_eval(euler_polygon(decay, 0.1), 0, 1.0, 0.25)
    ex = flow_eval(decay_exact, 0, 1.0, 0.25)
    assert ex == pytest.approx(math.exp(-0.25))
    c1, c2 = euler_error_constants([lambda v: -v], (-1.0, 1.0), 0.25)
    assert c1 == pytest.approx(1.0, rel=1e-6)
    assert abs(eu - ex) <= math.exp(c1 * 0.25) * c2 * 0.1


def test_grid_points_reproduce_recursion():
    h, y = 0.1, 1.0
    ref = []
    for _ in range(30):
        y = y + h * (-y)
        ref.append(y)
    scheme = euler_polygon(decay, h)
    cur = FlowCursor(scheme, 0, 1.0)
    for i, r in enumerate(ref, start=1):
        assert flow_eval(scheme, 0, 1.0, i * h) == r
        assert cur(i * h) == r


def test_exact_grid_point_bitwise():
    # 0.25 = 2 * 0.125 is exact in binary, so the right endpoint branch is taken
    h = 0.125
    y1 = 1.0 - h
    y2 = y1 - h * y1
    assert flow_eval(euler_polygon(decay, h), 0, 1.0, 0.25) == y2


def test_first_order_convergence():
    ex = math.exp(-1.0)
    errs = [abs(flow_eval(euler_polygon(decay, h), 0, 1.0, 1.0) - ex) for h in (0.1, 0.05, 0.025)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(1.7 <= r <= 2.3 for r in ratios)


def test_restarted_grid_bound():
    # Euler restarted at jump times, against the exact composition; nu carried through
    h = 0.05
    rng = np.random.default_rng(3)
    restarts = np.cumsum(rng.exponential(0.7, size=8))
    c1, c2 = euler_error_constants([lambda v: -v], (-1.0, 1.0), 1.0)
    beta_bar, beta, prev = 1.0, 1.0, 0.0
    for n, t in enumerate(restarts, start=1):
        beta_bar = flow_eval(euler_polygon(decay, h), 0, beta_bar, t - prev)
        beta = flow_eval(decay_exact, 0, beta, t - prev)
        prev = t
        assert abs(beta_bar - beta) <= math.exp(c1 * t) * n * c2 * h


def test_cursor_counts_steps_and_rejects_going_back():
    cur = FlowCursor(euler_polygon(decay, 0.1), 0, 1.0)
    cur(0.35)
    assert cur.steps == 3
    with pytest.raises(InvalidArgument):
        cur(0.2)


@pytest.mark.parametrize("nu,t", [(math.nan, 1.0), (1.0, math.inf), (1.0, -0.1)])
def test_flow_eval_arguments(nu, t):
    with pytest.raises(InvalidArgument):
        flow_eval(euler_polygon(decay, 0.1), 0, nu, t)


def test_scheme_validation():
    with pytest.raises(InvalidArgument):
        euler_polygon(decay, 0.0)
    with pytest.raises(InvalidArgument):
        exact_flow(None)


def test_reference_flow_is_accurate():
    assert flow_eval(reference_flow(decay, 0.01), 0, 1.0, 1.0) == pytest.approx(math.exp(-1), abs=1e-9)


def test_reference_solve_constant():
    tr = reference_solve(lambda v: 0.0, 5.0, 3.0, 0.01)
    assert np.allclose(tr(np.linspace(0, 3, 17)), 5.0)


def test_reference_solve_decay():
    tr = reference_solve(lambda v: -v, 1.0, 1.0, 1e-3)
    assert abs(float(tr(1.0)) - math.exp(-1)) < 1e-8
    # dense output between nodes
    assert abs(float(tr(0.3337)) - math.exp(-0.3337)) < 1e-8


def test_reference_solve_vector():
    rot = lambda y: np.array([-y[1], y[0]])
    tr = reference_solve(rot, np.array([1.0, 0.0]), math.pi / 2, 1e-3)
    assert np.allclose(tr(math.pi / 2), [0.0, 1.0], atol=1e-9)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_reference_solve_blow_up():
    with pytest.raises(NumericalFailure) as err:
        reference_solve(lambda v: v * v, 1.0, 2.0, 1e-3)
    assert 0.9 < err.value.t < 1.1


def test_reference_solve_outside_range():
    tr = reference_solve(lambda v: -v, 1.0, 1.0, 0.01)
    with pytest.raises(InvalidArgument):
        tr(1.5)
