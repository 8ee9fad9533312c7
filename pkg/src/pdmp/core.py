"""Thinning construction of a piecewise deterministic process.

Given a :class:`~pdmp.rng.ThinningTrace`, a path is built by scanning the
Poisson proposals: from the post-jump state ``(theta_{n-1}, nu_{n-1})`` at
``T_{n-1}``, proposal ``k`` is accepted when
``U_k * rate_bound <= intensity(theta_{n-1}, Phi(T*_k - T_{n-1}, nu_{n-1}))``.
The continuous coordinate is carried through the jump and the new mode is
``H(x, V_n)``, the inverse CDF of the kernel row evaluated at the pre-jump
state.  Mark uniforms are consumed by jump ordinal, so two paths built on the
same trace use the same ``V_n`` for their n-th jumps.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateRate, InvalidArgument, RateBoundViolation
from .flows import FlowScheme, flow_eval
from .rng import ThinningTrace

ROW_TOL = 1e-12


@dataclass(frozen=True)
class MarkState:
    theta: int
    nu: float

    def __iter__(self):
        yield self.theta
        yield self.nu

    def __getitem__(self, i):
        return (self.theta, self.nu)[i]


@dataclass(frozen=True)
class Characteristics:
    """Flow, jump intensity and post-jump kernel of a process.

    ``intensity(theta, nu)`` and ``kernel(theta, nu)`` (a probability vector
    over the ``mode_count`` modes) describe the jump mechanism.  With
    ``time_dependent=True`` both callables take a third argument, the
    absolute time, which is how time-inhomogeneous auxiliary characteristics
    are expressed.
    """

    mode_count: int
    intensity: Callable
    kernel: Callable
    rate_bound: float
    flow: FlowScheme
    time_dependent: bool = False

    def __post_init__(self):
        if self.mode_count < 1:
            raise InvalidArgument("mode_count must be at least 1")
        if not (self.rate_bound > 0 and math.isfinite(self.rate_bound)):
            raise InvalidArgument(f"rate bound must be positive and finite, got {self.rate_bound!r}")

    def rate(self, theta, nu, t=0.0):
        if self.time_dependent:
            return self.intensity(theta, nu, t)
        return self.intensity(theta, nu)

    def row(self, theta, nu, t=0.0):
        if self.time_dependent:
            return self.kernel(theta, nu, t)
        return self.kernel(theta, nu)

    def with_flow(self, flow: FlowScheme) -> Characteristics:
        return Characteristics(
            self.mode_count, self.intensity, self.kernel, self.rate_bound, flow, self.time_dependent
        )


@dataclass(frozen=True)
class PathSkeleton:
    """Embedded chain of a simulated path.

    ``jump_times[0] == 0`` and ``post_jump_states[0]`` is the initial state;
    entry ``n >= 1`` of both belongs to the n-th jump.  ``accepted_indices``
    holds the 1-based proposal indices ``tau_1 < tau_2 < ...``, so that
    ``jump_times[n] == trace.time(accepted_indices[n - 1])``.
    """

    jump_times: tuple
    accepted_indices: tuple
    post_jump_states: tuple
    horizon: float
    terminal: MarkState
    proposals: int
    cost: int = 0
    flow: Optional[FlowScheme] = field(default=None, repr=False, compare=False)

    @property
    def jump_count(self) -> int:
        return len(self.accepted_indices)

    def modes(self):
        return tuple(s.theta for s in self.post_jump_states)


def inverse_cdf_select(row, u: float) -> int:
    """Mode ``k_i`` with ``a_{i-1} < u <= a_i`` for the cumulative sums ``a``.

    Zero-probability modes are never returned, which only matters for the
    null event ``u == 0``.
    """
    row = np.asarray(row, dtype=float)
    if row.ndim != 1 or np.any(row < 0) or abs(row.sum() - 1.0) > ROW_TOL:
        raise InvalidArgument(f"kernel row must be a probability vector, got {row!r}")
    cum = np.cumsum(row)
    positive = np.flatnonzero(row > 0)
    i = int(np.searchsorted(cum, u, side="left"))
    if i >= len(row):
        # u lies above the rounded cumulative sum: take the last positive mode
        return int(positive[-1])
    if row[i] == 0:
        i = int(positive[np.searchsorted(positive, i)])
    return i


def _check_rate(chars, theta, nu, t, lam):
    if lam > chars.rate_bound:
        raise RateBoundViolation(theta, nu, t, lam, chars.rate_bound)
    if not lam >= 0:
        raise DegenerateRate(f"intensity {lam!r} at theta={theta}, nu={nu!r}, t={t!r}")


def simulate_path(chars: Characteristics, trace: ThinningTrace, x0) -> PathSkeleton:
    """Thin ``trace`` with ``chars`` starting from ``x0``."""
    theta, nu = int(x0[0]), float(x0[1])
    if not 0 <= theta < chars.mode_count:
        raise InvalidArgument(f"initial mode {theta} outside 0..{chars.mode_count - 1}")
    if trace.rate_bound != chars.rate_bound:
        raise InvalidArgument("trace and characteristics use different rate bounds")
    times = [0.0]
    taus = []
    states = [MarkState(theta, nu)]
    seg_start = 0.0
    cursor = chars.flow.cursor(theta, nu)
    cost = 0
    for k in range(len(trace)):
        t = float(trace.poisson_times[k])
        val = cursor(t - seg_start)
        lam = chars.rate(theta, val, t)
        _check_rate(chars, theta, val, t, lam)
        if trace.uniforms_accept[k] * chars.rate_bound <= lam:
            v = trace.uniforms_mark[len(taus)]
            theta = inverse_cdf_select(chars.row(theta, val, t), v)
            nu = val
            taus.append(k + 1)
            times.append(t)
            states.append(MarkState(theta, nu))
            seg_start = t
            cost += cursor.steps
            cursor = chars.flow.cursor(theta, nu)
    end = cursor(trace.horizon - seg_start)
    cost += cursor.steps
    return PathSkeleton(
        tuple(times),
        tuple(taus),
        tuple(states),
        trace.horizon,
        MarkState(theta, end),
        len(trace),
        cost,
        chars.flow,
    )


def evaluate_state(skeleton: PathSkeleton, chars: Characteristics, t: float) -> MarkState:
    """``x_t = (theta_n, Phi_{theta_n}(t - T_n, nu_n))`` for ``T_n <= t < T_{n+1}``."""
    if not 0 <= t <= skeleton.horizon:
        raise InvalidArgument(f"t={t!r} outside [0, {skeleton.horizon}]")
    n = bisect.bisect_right(skeleton.jump_times, t) - 1
    state = skeleton.post_jump_states[n]
    return MarkState(state.theta, flow_eval(chars.flow, state.theta, state.nu, t - skeleton.jump_times[n]))


def simulate_coupled(chars_fine: Characteristics, chars_coarse: Characteristics, trace: ThinningTrace, x0):
    """Two paths thinned from the same trace; marks are shared by jump ordinal."""
    if chars_fine.rate_bound != chars_coarse.rate_bound:
        raise InvalidArgument("coupled characteristics must share the rate bound")
    if chars_fine.mode_count != chars_coarse.mode_count:
        raise InvalidArgument("coupled characteristics must share the mode set")
    return simulate_path(chars_fine, trace, x0), simulate_path(chars_coarse, trace, x0)


def first_divergence(fine: PathSkeleton, coarse: PathSkeleton) -> Optional[int]:
    """Smallest ``k >= 1`` with ``(tau_k, theta_k)`` differing, else ``None``.

    A path that stops jumping before the other counts as differing at the
    first missing jump.
    """
    a = list(zip(fine.accepted_indices, fine.modes()[1:]))
    b = list(zip(coarse.accepted_indices, coarse.modes()[1:]))
    for k, (x, y) in enumerate(zip(a, b), start=1):
        if x != y:
            return k
    if len(a) != len(b):
        return min(len(a), len(b)) + 1
    return None


def divergence_before_horizon(fine: PathSkeleton, coarse: PathSkeleton) -> bool:
    """Whether ``min(T_k, Tbar_k) <= T`` at the first divergence index ``k``."""
    return first_divergence(fine, coarse) is not None
