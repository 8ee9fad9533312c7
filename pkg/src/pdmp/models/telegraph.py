"""Two-mode telegraph process with closed-form laws, used as a test oracle.

The mode switches ``0 <-> 1`` at constant rates ``a_0, a_1`` and the
continuous coordinate follows ``d nu / dt = c_theta - kappa * nu``.  Jump
times and modes do not depend on ``nu``, so the mode is a two-state Markov
chain with generator ``G = [[-a_0, a_0], [a_1, -a_1]]`` and the mean of
``nu_T`` is available through a matrix exponential.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import expm

from ..core import Characteristics
from ..errors import InvalidArgument
from ..flows import FlowScheme, euler_polygon, exact_flow
from ..kernels import JitModel


@dataclass(frozen=True)
class TelegraphParams:
    a0: float = 1.0
    a1: float = 2.0
    c0: float = 1.0
    c1: float = -1.0
    kappa: float = 0.0

    def __post_init__(self):
        if not (self.a0 > 0 and self.a1 > 0):
            raise InvalidArgument("telegraph switching rates must be positive")
        if self.kappa < 0:
            raise InvalidArgument("kappa must be non-negative")

    def vector(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.c0, self.c1, self.kappa], dtype=float)

    def generator(self) -> np.ndarray:
        return np.array([[-self.a0, self.a0], [self.a1, -self.a1]])


@njit(cache=True)
def drift(theta, nu, p):
    return p[2 + theta] - p[4] * nu


@njit(cache=True)
def rate(theta, nu, p):
    return p[theta]


@njit(cache=True)
def jump_prob(theta, nu, target, p):
    return 1.0 if target == 1 - theta else 0.0


@njit(cache=True)
def select(theta, nu, u, p):
    return 1 - theta


def jit_model(params: TelegraphParams = TelegraphParams()) -> JitModel:
    return JitModel(2, drift, rate, jump_prob, select, params.vector())


def telegraph_solution(params: TelegraphParams):
    """Closed-form flow ``(theta, nu, t) -> nu_t``."""
    c, k = (params.c0, params.c1), params.kappa

    def solution(theta, nu, t):
        if k == 0:
            return nu + c[theta] * t
        e = math.exp(-k * t)
        return nu * e + c[theta] / k * (1.0 - e)

    return solution


def telegraph_characteristics(params: TelegraphParams = TelegraphParams(),
                              flow: FlowScheme | float | None = None,
                              rate_bound: float = 5.0) -> Characteristics:
    """Python-route characteristics; ``flow=None`` means the exact flow, a float an Euler step."""
    p = params.vector()
    field = lambda theta, nu: drift.py_func(theta, nu, p)
    if flow is None:
        flow = exact_flow(telegraph_solution(params), field)
    elif not isinstance(flow, FlowScheme):
        flow = euler_polygon(field, float(flow))
    rates = (params.a0, params.a1)
    rows = (np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    return Characteristics(2, lambda theta, nu: rates[theta], lambda theta, nu: rows[theta].copy(),
                           float(rate_bound), flow)


def mode_law(params: TelegraphParams, theta0: int, t: float) -> np.ndarray:
    """``P(theta_t = j | theta_0)`` for ``j = 0, 1``."""
    return expm(params.generator() * t)[theta0]


def mean_terminal(params: TelegraphParams, theta0: int, nu0: float, t: float) -> float:
    """Exact ``E[nu_t]``.

    ``E[nu_t] = e^{-kappa t} nu0 + int_0^t e^{-kappa (t-s)} P_s c ds``, where
    the integral is read off the corner block of the exponential of an
    augmented matrix.
    """
    k = params.kappa
    g = params.generator() + k * np.eye(2)
    aug = np.zeros((3, 3))
    aug[:2, :2] = g
    aug[:2, 2] = [params.c0, params.c1]
    integral = expm(aug * t)[:2, 2]
    return math.exp(-k * t) * (nu0 + integral[theta0])


def jump_count_moments(params: TelegraphParams, t: float):
    """Mean and variance of the number of switches on ``[0, t]`` when ``a0 == a1``."""
    if params.a0 != params.a1:
        raise InvalidArgument("closed-form count moments need symmetric rates")
    return params.a0 * t, params.a0 * t


def euler_bias_constant(nu0: float, t: float) -> float:
    """First-order Euler bias of ``nu_t`` for the pure decay ``c = 0, kappa = 1``.

    Each full Euler cell multiplies by ``1 - h = exp(-h - h^2/2 + ...)``, so
    ``X_h - X = -nu0 t e^{-t} h / 2 + O(h^2)`` whatever the jumps.
    """
    return -nu0 * t * math.exp(-t) / 2.0
