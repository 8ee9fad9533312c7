"""Likelihood-ratio weights between a target process and an auxiliary one.

A path drawn under auxiliary characteristics ``(lambda~, Q~)`` (or under an
alternative flow) is reweighted to the target law by a product of per
proposal factors taken along the common thinning trace:

* at an accepted proposal, ``lambda(x) Q(x, theta') / (lambda~ Q~(theta'))``;
* at a rejected proposal, ``(1 - lambda(x)/lambda*) / (1 - lambda~/lambda*)``.

The rejected proposals after the last jump make up the tail factor, and on
a path without jumps the weight is the tail alone.  Factors are accumulated
as logarithms.  A zero factor in the target part makes the weight exactly
zero, while a zero factor in the auxiliary part means the auxiliary does
not dominate the target and raises :class:`~pdmp.errors.DegenerateWeight`.

Three auxiliary families are supported:

``case1``
    intensity and kernel depending on the mode only;
``case2``
    target intensity and kernel frozen along a deterministic trajectory
    ``v(t)``, which makes the auxiliary time-inhomogeneous but independent
    of the path's own continuous coordinate;
``case3``
    same intensity and kernel, different flow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Characteristics, MarkState, PathSkeleton, simulate_path
from .errors import DegenerateWeight, InvalidArgument, RateBoundViolation
from .flows import FlowScheme, euler_polygon
from .rng import ThinningTrace

KINDS = ("case1", "case2", "case3")


@dataclass(frozen=True)
class AuxiliarySpec:
    """Auxiliary characteristics used to draw skeletons.

    Parameters
    ----------
    kind : {"case1", "case2", "case3"}
    aux_rate : array, optional
        Mode-indexed intensities (case 1).
    aux_kernel : array, optional
        Row-stochastic matrix over the modes (case 1).
    trajectory : callable, optional
        ``t -> v(t)``, vectorised over ``t`` (case 2).
    alt_flow : FlowScheme, optional
        The flow of the reweighted leg (case 3).  Samplers supply it from the
        coarse step size, so it may be left unset.
    """

    kind: str
    aux_rate: Optional[np.ndarray] = None
    aux_kernel: Optional[np.ndarray] = None
    trajectory: Optional[Callable] = None
    alt_flow: Optional[FlowScheme] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown auxiliary kind {self.kind!r}")
        if self.kind == "case1":
            if self.aux_rate is None or self.aux_kernel is None:
                raise InvalidArgument("case1 needs aux_rate and aux_kernel")
            rate = np.asarray(self.aux_rate, dtype=float)
            kern = np.asarray(self.aux_kernel, dtype=float)
            if kern.shape != (rate.size, rate.size):
                raise InvalidArgument("aux_kernel must be square with one row per mode")
            if np.any(rate <= 0):
                raise InvalidArgument("case1 intensities must be positive")
            if np.any(kern < 0) or np.any(np.abs(kern.sum(axis=1) - 1.0) > 1e-12):
                raise InvalidArgument("aux_kernel rows must be probability vectors")
            object.__setattr__(self, "aux_rate", rate)
            object.__setattr__(self, "aux_kernel", kern)
        if self.kind == "case2" and self.trajectory is None:
            raise InvalidArgument("case2 needs a reference trajectory")

    # case-1 quantities of the domination condition
    @property
    def rate_min(self) -> float:
        return float(self.aux_rate.min())

    @property
    def rate_max(self) -> float:
        return float(self.aux_rate.max())

    @property
    def kernel_floor(self) -> float:
        """Smallest positive entry of the auxiliary kernel."""
        k = self.aux_kernel
        return float(k[k > 0].min())

    def check_bound(self, rate_bound: float):
        """Require ``0 < min lambda~ <= max lambda~ < lambda*`` (case 1)."""
        if self.kind == "case1" and not self.rate_max < rate_bound:
            raise InvalidArgument(
                f"auxiliary intensities must stay below the rate bound {rate_bound}"
            )


def envelope(spec: AuxiliarySpec, rate_bound: float, n_proposals: int) -> float:
    """Upper bound ``(rho (l_min/l*) (1 - l_max/l*))^{-N*}`` on case-1 weights."""
    if spec.kind != "case1":
        raise InvalidArgument("the weight envelope is only defined for case1")
    base = spec.kernel_floor * (spec.rate_min / rate_bound) * (1.0 - spec.rate_max / rate_bound)
    return base ** (-float(n_proposals))


def auxiliary_characteristics(spec: AuxiliarySpec, target: Characteristics) -> Characteristics:
    """Characteristics that generate the auxiliary skeleton (cases 1 and 2)."""
    if spec.kind == "case1":
        spec.check_bound(target.rate_bound)
        rate, kern = spec.aux_rate, spec.aux_kernel
        return Characteristics(
            target.mode_count,
            lambda theta, nu: float(rate[theta]),
            lambda theta, nu: kern[theta],
            target.rate_bound,
            target.flow,
        )
    if spec.kind == "case2":
        v = spec.trajectory
        return Characteristics(
            target.mode_count,
            lambda theta, nu, t: target.rate(theta, float(v(t))),
            lambda theta, nu, t: target.row(theta, float(v(t))),
            target.rate_bound,
            target.flow,
            time_dependent=True,
        )
    raise InvalidArgument("case3 keeps the target characteristics; use weight_flow_change")


class _LogWeight:
    __slots__ = ("log", "zero")

    def __init__(self):
        self.log = 0.0
        self.zero = False

    def ratio(self, num, den, where):
        if not den > 0:
            raise DegenerateWeight(f"auxiliary factor {den!r} at {where}")
        if num <= 0:
            self.zero = True
        else:
            self.log += math.log(num) - math.log(den)

    def value(self):
        return 0.0 if self.zero else math.exp(self.log)


def _bounded(chars, theta, nu, t):
    lam = chars.rate(theta, nu, t)
    if lam > chars.rate_bound or not lam >= 0:
        raise RateBoundViolation(theta, nu, t, lam, chars.rate_bound)
    return lam


def _walk(skeleton: PathSkeleton, trace: ThinningTrace, flow: FlowScheme):
    """Yield ``(k, t, theta, value, new_mode or None)`` for every proposal.

    ``value`` is the continuous coordinate just before ``T*_k`` obtained by
    transporting with ``flow`` along the skeleton's jump times and modes,
    starting from the skeleton's initial value and carrying the value
    through each jump.
    """
    accepted = dict(zip(skeleton.accepted_indices, range(1, skeleton.jump_count + 1)))
    theta, nu = skeleton.post_jump_states[0]
    seg = 0.0
    cursor = flow.cursor(theta, nu)
    for k in range(len(trace)):
        t = float(trace.poisson_times[k])
        val = cursor(t - seg)
        n = accepted.get(k + 1)
        new = None if n is None else skeleton.post_jump_states[n].theta
        yield k, t, theta, val, new
        if new is not None:
            theta, seg = new, t
            cursor = flow.cursor(theta, val)
    yield len(trace), skeleton.horizon, theta, cursor(skeleton.horizon - seg), None


def weight_mode_auxiliary(skeleton: PathSkeleton, trace: ThinningTrace, target: Characteristics,
                          spec: AuxiliarySpec) -> float:
    """Weight of a case-1 or case-2 auxiliary skeleton under ``target``.

    The skeleton must come from :func:`auxiliary_characteristics` on the same
    trace, and ``target.flow`` is the flow used for the continuous
    coordinate inside the target factors.
    """
    aux = auxiliary_characteristics(spec, target)
    lam_star = target.rate_bound
    w = _LogWeight()
    for k, t, theta, val, new in _walk(skeleton, trace, target.flow):
        if k == len(trace):
            break
        lam = _bounded(target, theta, val, t)
        lam_aux = aux.rate(theta, val, t)
        if lam_aux > lam_star:
            raise RateBoundViolation(theta, val, t, lam_aux, lam_star)
        if new is None:
            w.ratio(1.0 - lam / lam_star, 1.0 - lam_aux / lam_star, f"t={t}")
        else:
            q = target.row(theta, val)[new]
            q_aux = aux.row(theta, val, t)[new]
            w.ratio(lam * q, lam_aux * q_aux, f"t={t}")
    return w.value()


def weight_flow_change(skeleton: PathSkeleton, trace: ThinningTrace, target: Characteristics,
                       alt_flow: FlowScheme):
    """Reweight a target skeleton to the process with flow ``alt_flow``.

    Returns ``(terminal, weight)`` where ``terminal`` is the state reached by
    transporting with ``alt_flow`` along the skeleton (the ``mu`` sequence).
    """
    lam_star = target.rate_bound
    w = _LogWeight()
    fine = _walk(skeleton, trace, skeleton.flow or target.flow)
    alt = _walk(skeleton, trace, alt_flow)
    for (k, t, theta, nu, new), (_, _, _, mu, _) in zip(fine, alt):
        if k == len(trace):
            return MarkState(theta, mu), w.value()
        lam = _bounded(target, theta, nu, t)
        lam_alt = _bounded(target, theta, mu, t)
        if new is None:
            w.ratio(1.0 - lam_alt / lam_star, 1.0 - lam / lam_star, f"t={t}")
        else:
            w.ratio(lam_alt * target.row(theta, mu)[new], lam * target.row(theta, nu)[new], f"t={t}")
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class WeightedSample:
    value: float
    weight: float
    skeleton: Optional[PathSkeleton] = None
    terminal: Optional[MarkState] = None


def _euler(target: Characteristics, h: float) -> Characteristics:
    return target.with_flow(euler_polygon(target.flow.vector_field, h))


def weighted_sample(target: Characteristics, spec: AuxiliarySpec, trace: ThinningTrace, h: float,
                    x0, functional=lambda theta, nu: nu) -> WeightedSample:
    """One Euler-``h`` sample of ``F(x~_T) R~_T`` under a case-1 or case-2 auxiliary."""
    tgt = _euler(target, h)
    skel = simulate_path(auxiliary_characteristics(spec, tgt), trace, x0)
    w = weight_mode_auxiliary(skel, trace, tgt, spec)
    term = skel.terminal
    return WeightedSample(functional(term.theta, term.nu) * w, w, skel, term)


def coupled_weighted_pair(target: Characteristics, spec: AuxiliarySpec, trace: ThinningTrace,
                          h_fine: float, h_coarse: float, x0,
                          functional=lambda theta, nu: nu):
    """Fine and coarse weighted samples sharing one skeleton.

    ``value`` is ``F`` at the terminal state multiplied by the weight.  For
    cases 1 and 2 the skeleton comes from the auxiliary and both legs are
    weighted.  For case 3 the fine leg is the plain Euler-``h_fine`` path
    (weight 1) and the coarse leg follows the same jumps with the
    Euler-``h_coarse`` flow and the flow-change weight.
    """
    fine = _euler(target, h_fine)
    coarse = _euler(target, h_coarse)
    if spec.kind == "case3":
        skel = simulate_path(fine, trace, x0)
        term_f = skel.terminal
        term_c, w = weight_flow_change(skel, trace, fine, coarse.flow)
        return (
            WeightedSample(functional(*term_f), 1.0, skel, term_f),
            WeightedSample(functional(*term_c) * w, w, skel, term_c),
        )
    skel = simulate_path(auxiliary_characteristics(spec, fine), trace, x0)
    w_f = weight_mode_auxiliary(skel, trace, fine, spec)
    w_c = weight_mode_auxiliary(skel, trace, coarse, spec)
    # the coarse leg follows the same jumps with the coarse flow
    term_c = None
    for k, t, theta, val, _ in _walk(skel, trace, coarse.flow):
        if k == len(trace):
            term_c = MarkState(theta, val)
    term_f = skel.terminal
    return (
        WeightedSample(functional(*term_f) * w_f, w_f, skel, term_f),
        WeightedSample(functional(*term_c) * w_c, w_c, skel, term_c),
    )
