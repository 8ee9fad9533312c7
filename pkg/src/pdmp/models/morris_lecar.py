"""Stochastic Morris-Lecar neuron with ``N_K`` potassium channels.

The mode ``theta`` is the number of open potassium gates and ``nu`` the
membrane potential (mV, time in ms).  Each gate opens at rate ``alpha_K(v)``
and closes at rate ``beta_K(v)``, so the total jump rate is
``(N_K - theta) alpha_K + theta beta_K`` and a jump moves ``theta`` by +/-1.

The model functions below are compiled with numba and take a flat parameter
vector; the pure-Python versions (``.py_func``) back the generic
:class:`~pdmp.core.Characteristics` objects.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from numba import njit

from ..core import Characteristics, MarkState
from ..errors import DegenerateRate, InvalidArgument
from ..flows import FlowScheme, euler_polygon, reference_solve
from ..kernels import JitModel
from ..reweight import AuxiliarySpec

DEFAULT_RATE_BOUND = 10.0


@dataclass(frozen=True)
class MlParams:
    V1: float = -1.2
    V2: float = 18.0
    V3: float = 2.0
    V4: float = 30.0
    lambda_K: float = 0.04
    C: float = 20.0
    g_Leak: float = 2.0
    V_Leak: float = -60.0
    g_Ca: float = 4.4
    V_Ca: float = 120.0
    g_K: float = 8.0
    V_K: float = -84.0
    I: float = 60.0
    N_K: int = 100

    def __post_init__(self):
        if not self.C > 0:
            raise InvalidArgument("membrane capacitance C must be positive")
        if int(self.N_K) != self.N_K or self.N_K < 1:
            raise InvalidArgument("N_K must be a positive integer")
        if self.V2 == 0 or self.V4 == 0:
            raise InvalidArgument("V2 and V4 must be non-zero")
        object.__setattr__(self, "N_K", int(self.N_K))

    def vector(self) -> np.ndarray:
        return np.array([float(getattr(self, f.name)) for f in fields(self)])

    @classmethod
    def from_mapping(cls, mapping) -> MlParams:
        names = {f.name for f in fields(cls)}
        unknown = set(mapping) - names
        if unknown:
            raise InvalidArgument(f"unknown Morris-Lecar parameters: {sorted(unknown)}")
        return cls(**{k: (int(v) if k == "N_K" else float(v)) for k, v in mapping.items()})

    def as_dict(self):
        return asdict(self)


# indices into MlParams.vector()
_V1, _V2, _V3, _V4, _LK, _C, _GL, _VL, _GCA, _VCA, _GK, _VK, _I, _NK = range(14)


@njit(cache=True)
def m_inf(v, p):
    return 0.5 * (1.0 + math.tanh((v - p[_V1]) / p[_V2]))


@njit(cache=True)
def n_inf(v, p):
    return 0.5 * (1.0 + math.tanh((v - p[_V3]) / p[_V4]))


@njit(cache=True)
def gate_rate(v, p):
    return p[_LK] * math.cosh((v - p[_V3]) / (2.0 * p[_V4]))


@njit(cache=True)
def alpha_k(v, p):
    return gate_rate(v, p) * n_inf(v, p)


@njit(cache=True)
def beta_k(v, p):
    return gate_rate(v, p) * (1.0 - n_inf(v, p))


@njit(cache=True)
def drift(theta, v, p):
    return (
        p[_I]
        - p[_GL] * (v - p[_VL])
        - p[_GCA] * m_inf(v, p) * (v - p[_VCA])
        - p[_GK] * (theta / p[_NK]) * (v - p[_VK])
    ) / p[_C]


@njit(cache=True)
def rate(theta, v, p):
    return (p[_NK] - theta) * alpha_k(v, p) + theta * beta_k(v, p)


@njit(cache=True)
def jump_prob(theta, v, target, p):
    lam = rate(theta, v, p)
    if target == theta + 1:
        return (p[_NK] - theta) * alpha_k(v, p) / lam
    if target == theta - 1:
        return theta * beta_k(v, p) / lam
    return 0.0


@njit(cache=True)
def select(theta, v, u, p):
    # modes are ordered, so theta - 1 comes first in the cumulative sum
    down = theta * beta_k(v, p) / rate(theta, v, p)
    if down > 0.0 and u <= down:
        return theta - 1
    return theta + 1


@njit(cache=True)
def ode_field(y, p):
    """Deterministic (v, n) system with the gate fraction ``n`` in place of theta/N_K."""
    v, n = y[0], y[1]
    out = np.empty(2)
    out[0] = (
        p[_I]
        - p[_GL] * (v - p[_VL])
        - p[_GCA] * m_inf(v, p) * (v - p[_VCA])
        - p[_GK] * n * (v - p[_VK])
    ) / p[_C]
    out[1] = (1.0 - n) * alpha_k(v, p) - n * beta_k(v, p)
    return out


def jit_model(params: MlParams = MlParams()) -> JitModel:
    return JitModel(params.N_K + 1, drift, rate, jump_prob, select, params.vector())


DEFAULT_THETA0 = 0
DEFAULT_NU0 = -20.0


def default_initial_state(params: MlParams = MlParams()) -> MarkState:
    """All potassium gates closed at ``v = -20`` mV.

    This start reproduces the mean (about -31.5 mV) and the variance (about
    330 mV^2) of the membrane potential at ``T = 30`` that the reference
    experiments report for the default parameters.
    """
    return MarkState(DEFAULT_THETA0, DEFAULT_NU0)


def equilibrium_initial_state(params: MlParams = MlParams(), nu0: float = -60.0) -> MarkState:
    """``(round(N_K * N_inf(nu0)), nu0)``: gates at their equilibrium fraction for ``nu0``."""
    p = params.vector()
    return MarkState(int(round(params.N_K * n_inf.py_func(nu0, p))), float(nu0))


def ml_characteristics(params: MlParams = MlParams(), flow: FlowScheme | float = 0.1,
                       rate_bound: float = DEFAULT_RATE_BOUND) -> Characteristics:
    """Characteristics of the stochastic model; a float ``flow`` means an Euler step."""
    if not rate_bound > 0:
        raise InvalidArgument(f"rate bound must be positive, got {rate_bound!r}")
    p = params.vector()
    n_modes = params.N_K + 1
    f, lam, a, b = drift.py_func, rate.py_func, alpha_k.py_func, beta_k.py_func

    def vector_field(theta, v):
        return f(theta, v, p)

    def intensity(theta, v):
        value = lam(theta, v, p)
        if value <= 0.0:
            raise DegenerateRate(f"zero Morris-Lecar intensity at theta={theta}, v={v!r}")
        return value

    def kernel(theta, v):
        total = intensity(theta, v)
        row = np.zeros(n_modes)
        if theta > 0:
            row[theta - 1] = theta * b(v, p) / total
        if theta < n_modes - 1:
            row[theta + 1] = (params.N_K - theta) * a(v, p) / total
        return row

    if not isinstance(flow, FlowScheme):
        flow = euler_polygon(vector_field, float(flow))
    return Characteristics(n_modes, intensity, kernel, float(rate_bound), flow)


def ml_vector_field(params: MlParams = MlParams()):
    """The scalar field ``f(theta, v)`` for building other flow schemes."""
    p = params.vector()
    f = drift.py_func
    return lambda theta, v: f(theta, v, p)


def deterministic_ml(params: MlParams = MlParams(), horizon: float = 30.0, initial=None,
                     fine_step: float = 1e-4):
    """RK4 solution of the deterministic (v, n) system.

    ``initial`` is ``(v0, n0)`` or a :class:`~pdmp.core.MarkState`, which is
    mapped to ``(nu, theta / N_K)``.  The default is the stochastic default
    start.
    """
    if initial is None:
        initial = default_initial_state(params)
    if isinstance(initial, MarkState):
        initial = (initial.nu, initial.theta / params.N_K)
    return reference_solve(ode_field, np.asarray(initial, dtype=float), horizon, fine_step,
                           params=params.vector())


def case1_spec(params: MlParams = MlParams()) -> AuxiliarySpec:
    """Mode-only auxiliary: unit intensity, each gate equally likely to flip."""
    n = params.N_K
    kern = np.zeros((n + 1, n + 1))
    for theta in range(n + 1):
        if theta < n:
            kern[theta, theta + 1] = (n - theta) / n
        if theta > 0:
            kern[theta, theta - 1] = theta / n
    return AuxiliarySpec("case1", aux_rate=np.ones(n + 1), aux_kernel=kern)


def case2_spec(params: MlParams = MlParams(), horizon: float = 30.0, initial=None,
               fine_step: float = 1e-4) -> AuxiliarySpec:
    """Target intensity and kernel frozen along the deterministic potential ``v(t)``."""
    traj = deterministic_ml(params, horizon, initial, fine_step)
    return AuxiliarySpec("case2", trajectory=lambda t: traj(t)[..., 0])
