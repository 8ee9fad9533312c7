"""Deterministic motion between jumps.

Three kinds of flow are supported:

* ``exact``: a closed-form solution ``solution(theta, nu, t)``;
* ``euler``: the continuous Euler polygon with step ``h``, i.e. the Euler
  recursion ``y_{i+1} = y_i + h f(y_i)`` on the grid ``{i h}`` started at the
  evaluation origin, linearly interpolated inside each cell;
* ``reference``: classical RK4 with a fine step, same grid convention.

The grid is anchored at the start of each inter-jump segment, so a flow is
always evaluated as a function of the elapsed time since its origin.  A time
exactly on a grid point ``(i+1) h`` is served by the cell ``[i h, (i+1) h]``
whose right end reproduces ``y_{i+1}`` bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numba import njit
from numba.core.registry import CPUDispatcher
from scipy.interpolate import CubicHermiteSpline

from .errors import InvalidArgument, NumericalFailure

KINDS = ("exact", "euler", "reference")


@dataclass(frozen=True)
class FlowScheme:
    """A family of flows ``(theta, nu, t) -> nu_t`` indexed by the mode.

    ``vector_field(theta, nu)`` is required for the ``euler`` and
    ``reference`` kinds; ``solution(theta, nu, t)`` for ``exact``.
    """

    kind: str
    vector_field: Optional[Callable[[int, float], float]] = None
    step: Optional[float] = None
    solution: Optional[Callable[[int, float, float], float]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown flow kind {self.kind!r}")
        if self.kind == "exact":
            if self.solution is None:
                raise InvalidArgument("exact flow needs a closed-form solution")
        else:
            if self.vector_field is None:
                raise InvalidArgument(f"{self.kind} flow needs a vector field")
            if self.step is None or not self.step > 0 or not math.isfinite(self.step):
                raise InvalidArgument(f"{self.kind} flow needs a positive step, got {self.step!r}")

    def cursor(self, theta, nu) -> FlowCursor:
        return FlowCursor(self, theta, nu)


def exact_flow(solution, vector_field=None) -> FlowScheme:
    return FlowScheme("exact", vector_field=vector_field, solution=solution)


def euler_polygon(vector_field, h: float) -> FlowScheme:
    return FlowScheme("euler", vector_field=vector_field, step=float(h))


def reference_flow(vector_field, h_ref: float = 1e-4) -> FlowScheme:
    return FlowScheme("reference", vector_field=vector_field, step=float(h_ref))


class FlowCursor:
    """Incremental evaluation of one flow from a fixed origin.

    Successive calls must use non-decreasing elapsed times; the grid state is
    kept between calls so a whole inter-jump segment costs one pass over the
    grid.  ``steps`` counts the grid updates performed so far.
    """

    __slots__ = ("scheme", "theta", "origin", "y", "fy", "i", "steps", "_last")

    def __init__(self, scheme: FlowScheme, theta, nu):
        self.scheme = scheme
        self.theta = theta
        self.origin = nu
        self.y = nu
        self.i = 0
        self.steps = 0
        self._last = 0.0
        self.fy = scheme.vector_field(theta, nu) if scheme.kind == "euler" else None

    def __call__(self, tau: float) -> float:
        if tau < self._last:
            raise InvalidArgument("flow cursor times must be non-decreasing")
        self._last = tau
        kind = self.scheme.kind
        if kind == "exact":
            return self.scheme.solution(self.theta, self.origin, tau)
        h = self.scheme.step
        if kind == "euler":
            f = self.scheme.vector_field
            while (self.i + 1) * h < tau:
                self.y = self.y + h * self.fy
                self.i += 1
                self.fy = f(self.theta, self.y)
                self.steps += 1
            if (self.i + 1) * h == tau:
                return self.y + h * self.fy
            return self.y + (tau - self.i * h) * self.fy
        # reference: RK4 on the same grid, partial last step
        while (self.i + 1) * h < tau:
            self.y = _rk4_step(self.scheme.vector_field, self.theta, self.y, h)
            self.i += 1
            self.steps += 1
        if (self.i + 1) * h == tau:
            return _rk4_step(self.scheme.vector_field, self.theta, self.y, h)
        return _rk4_step(self.scheme.vector_field, self.theta, self.y, tau - self.i * h)


def _rk4_step(f, theta, y, h):
    k1 = f(theta, y)
    k2 = f(theta, y + 0.5 * h * k1)
    k3 = f(theta, y + 0.5 * h * k2)
    k4 = f(theta, y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def flow_eval(scheme: FlowScheme, theta, nu: float, t: float) -> float:
    """Value of the flow of mode ``theta`` started at ``nu`` after time ``t``."""
    if not (math.isfinite(nu) and math.isfinite(t)):
        raise InvalidArgument(f"flow_eval needs finite nu and t, got nu={nu!r}, t={t!r}")
    if t < 0:
        raise InvalidArgument(f"flow_eval needs t >= 0, got {t!r}")
    return FlowCursor(scheme, theta, nu)(t)


def euler_error_constants(vector_fields, box, horizon, n_grid=20001):
    """Numerical ``(C1, C2)`` for the Euler polygon on ``box = (lo, hi)``.

    ``C1`` is the largest Lipschitz constant of the fields on the box and
    ``C2 = M (exp(C1 T) - 1) / (2 C1)`` with ``M = sup |f' f|``, the classical
    global-error constant of the explicit Euler method.  Derivatives are taken
    by central differences on a uniform grid, so the constants are estimates
    valid for trajectories that stay inside the box.
    """
    lo, hi = box
    x = np.linspace(lo, hi, n_grid)
    dx = x[1] - x[0]
    lip, curv = 0.0, 0.0
    for f in vector_fields:
        fx = np.array([f(v) for v in x])
        d = np.gradient(fx, dx)
        lip = max(lip, float(np.max(np.abs(d))))
        curv = max(curv, float(np.max(np.abs(d * fx))))
    if lip == 0.0:
        return 0.0, curv * horizon / 2.0
    return lip, curv * (math.exp(lip * horizon) - 1.0) / (2.0 * lip)


class DenseTrajectory:
    """RK4 output table with cubic Hermite interpolation between nodes."""

    def __init__(self, times, states, derivatives):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self.derivatives = np.asarray(derivatives, dtype=float)
        self._spline = None
        if len(self.times) > 1:
            self._spline = CubicHermiteSpline(self.times, self.states, self.derivatives, axis=0)

    @property
    def horizon(self):
        return float(self.times[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise InvalidArgument("dense trajectory queried outside its time range")
        if self._spline is None:
            return np.broadcast_to(self.states[0], t.shape + self.states.shape[1:]).copy()
        return self._spline(t)


@njit(cache=True)
def _rk4_table(field, p, y0, h, n_steps, last):
    d = y0.shape[0]
    ys = np.empty((n_steps + 1, d))
    ys[0] = y0
    y = y0.copy()
    for i in range(n_steps):
        step = last if i == n_steps - 1 else h
        k1 = field(y, p)
        k2 = field(y + 0.5 * step * k1, p)
        k3 = field(y + 0.5 * step * k2, p)
        k4 = field(y + step * k3, p)
        y = y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for j in range(d):
            if not np.isfinite(y[j]):
                return ys, i + 1
        ys[i + 1] = y
    return ys, -1


def reference_solve(vector_field, nu0, horizon: float, fine_step: float = 1e-4,
                    params=None) -> DenseTrajectory:
    """Integrate ``dy/dt = vector_field(y)`` with RK4 on ``[0, horizon]``.

    ``nu0`` may be a scalar or a vector.  The last step is shortened so the
    table ends exactly at ``horizon``.  A numba-compiled field is called as
    ``vector_field(y, params)`` on 1-d arrays inside a compiled loop.
    """
    if not fine_step > 0:
        raise InvalidArgument(f"fine_step must be positive, got {fine_step!r}")
    if not horizon >= 0:
        raise InvalidArgument(f"horizon must be non-negative, got {horizon!r}")
    scalar = np.ndim(nu0) == 0
    n_steps = max(1, math.ceil(horizon / fine_step - 1e-9))
    last = horizon - (n_steps - 1) * fine_step
    times = np.minimum(np.arange(n_steps + 1) * fine_step, horizon)
    times[-1] = horizon
    if horizon == 0:
        n_steps, last, times = 0, 0.0, np.array([0.0])

    if isinstance(vector_field, CPUDispatcher):
        y0 = np.atleast_1d(np.asarray(nu0, dtype=float))
        p = np.asarray(params if params is not None else (), dtype=float)
        ys, fail = _rk4_table(vector_field, p, y0, fine_step, n_steps, last)
        if fail >= 0:
            raise NumericalFailure("reference solution blew up", t=float(times[fail]))
        derivs = _eval_field(vector_field, p, ys)
    else:
        y = np.atleast_1d(np.asarray(nu0, dtype=float))
        ys = np.empty((n_steps + 1, y.size))
        ys[0] = y
        f = lambda _theta, v: np.atleast_1d(np.asarray(vector_field(v[0] if scalar else v), dtype=float))
        for i in range(n_steps):
            step = last if i == n_steps - 1 else fine_step
            y = _rk4_step(f, None, y, step)
            if not np.all(np.isfinite(y)):
                raise NumericalFailure("reference solution blew up", t=float(times[i + 1]))
            ys[i + 1] = y
        derivs = np.array([f(None, y) for y in ys])
    if scalar:
        ys, derivs = ys[:, 0], derivs[:, 0]
    return DenseTrajectory(times, ys, derivs)


@njit(cache=True)
def _eval_field(field, p, ys):
    out = np.empty_like(ys)
    for i in range(ys.shape[0]):
        out[i] = field(ys[i], p)
    return out
