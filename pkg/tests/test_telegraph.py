import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from pdmp.errors import InvalidArgument
from pdmp.models import telegraph as tg
from pdmp.rng import StreamKey
from pdmp.samplers import JitSampler


def forward_oracle(params, theta0, nu0, t):
    """Integrate d/dt (p, m) where m_j = E[nu_t 1{theta_t = j}]."""
    G = params.generator()
    c = np.array([params.c0, params.c1])

    def rhs(_, y):
        p, m = y[:2], y[2:]
        return np.concatenate([G.T @ p, G.T @ m + c * p - params.kappa * m])

    y0 = np.zeros(4)
    y0[theta0] = 1.0
    y0[2 + theta0] = nu0
    sol = solve_ivp(rhs, (0, t), y0, rtol=1e-11, atol=1e-12)
    return sol.y[:2, -1], sol.y[2:, -1].sum()


@pytest.mark.parametrize("params", [
    tg.TelegraphParams(),
    tg.TelegraphParams(a0=0.5, a1=3.0, c0=2.0, c1=-1.0, kappa=0.7),
])
@pytest.mark.parametrize("theta0", [0, 1])
def test_closed_forms_match_forward_equation(params, theta0):
    p, mean = forward_oracle(params, theta0, 1.5, 2.0)
    assert np.allclose(tg.mode_law(params, theta0, 2.0), p, atol=1e-9)
    assert tg.mean_terminal(params, theta0, 1.5, 2.0) == pytest.approx(mean, abs=1e-8)


def test_solution_solves_the_ode():
    params = tg.TelegraphParams(c0=2.0, c1=-1.0, kappa=0.7)
    sol = tg.telegraph_solution(params)
    for theta in (0, 1):
        r = solve_ivp(lambda t, y: [params.vector()[2 + theta] - 0.7 * y[0]], (0, 1.3), [0.4],
                      rtol=1e-11, atol=1e-12)
        assert sol(theta, 0.4, 1.3) == pytest.approx(r.y[0, -1], abs=1e-9)


def test_params_validation():
    with pytest.raises(InvalidArgument):
        tg.TelegraphParams(a0=0.0)
    with pytest.raises(InvalidArgument):
        tg.TelegraphParams(kappa=-1.0)
    with pytest.raises(InvalidArgument):
        tg.jump_count_moments(tg.TelegraphParams(a0=1.0, a1=2.0), 1.0)


def test_simulated_terminal_law():
    params = tg.TelegraphParams(a0=0.5, a1=3.0, c0=2.0, c1=-1.0, kappa=0.0)
    s = JitSampler(tg.jit_model(params), (0, 1.0), 2.0, 4.0)
    b = s.single(0.25, 100_000, StreamKey(1))
    p1 = tg.mode_law(params, 0, 2.0)[1]
    assert abs(b.sample.theta.mean() - p1) < 3 * math.sqrt(p1 * (1 - p1) / 1e5)
    nu = b.sample.nu
    assert abs(nu.mean() - tg.mean_terminal(params, 0, 1.0, 2.0)) < 3 * nu.std(ddof=1) / math.sqrt(len(nu))


def test_euler_bias_constant_by_quadrature():
    # one segment without jumps: (1 - h)^(t/h) = exp(-t) (1 - t h / 2 + ...)
    h, t, nu0 = 1e-4, 1.0, 2.0
    bias = nu0 * (1 - h) ** round(t / h) - nu0 * math.exp(-t)
    assert bias / h == pytest.approx(tg.euler_bias_constant(nu0, t), rel=1e-3)
