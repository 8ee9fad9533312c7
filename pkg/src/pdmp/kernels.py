"""Compiled thinning loops for bulk sampling.

These kernels run the same construction as :func:`pdmp.core.simulate_path`
over a whole :class:`~pdmp.rng.TraceBlock`, with the flow fixed to an Euler
polygon.  Model functions are numba-compiled callables passed as arguments:

* ``drift(theta, nu, p)``: the vector field ``f_theta(nu)``;
* ``rate(theta, nu, p)``: the jump intensity;
* ``jump_prob(theta, nu, target, p)``: one entry of the kernel row;
* ``select(theta, nu, u, p)``: the inverse-CDF mode choice ``H``.

Kernels never raise; they return a status code plus an ``info`` vector
``(row, theta, nu, t, value)`` describing the first failure, and the Python
wrappers in :mod:`pdmp.samplers` turn these into exceptions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

OK = 0
RATE_BOUND = 1
DEGENERATE_WEIGHT = 2
NON_FINITE = 3
AUX_RATE_BOUND = 4

AUX_MODE_ONLY = 1
AUX_FROZEN = 2


@dataclass(frozen=True)
class JitModel:
    """Compiled model functions plus their flat parameter vector."""

    n_modes: int
    drift: Callable
    rate: Callable
    jump_prob: Callable
    select: Callable
    params: np.ndarray


@njit(cache=True, nogil=True)
def _euler_advance(drift, p, theta, y, fy, i, steps, h, tau):
    # grid state (y, fy, i) is the Euler value at i*h and its slope
    while (i + 1) * h < tau:
        y = y + h * fy
        i += 1
        fy = drift(theta, y, p)
        steps += 1
    if (i + 1) * h == tau:
        val = y + h * fy
    else:
        val = y + (tau - i * h) * fy
    return y, fy, i, steps, val


@njit(cache=True, nogil=True)
def _fail(info, row, theta, nu, t, value):
    info[0] = row
    info[1] = theta
    info[2] = nu
    info[3] = t
    info[4] = value


@njit(cache=True, nogil=True)
def plain_block(drift, rate, select, p, times, accept, marks, counts, horizon, lam_star, h,
                theta0, nu0, out_theta, out_nu, out_cost, info):
    """Unweighted Euler-``h`` paths, one per trace row."""
    for r in range(counts.shape[0]):
        theta = theta0
        y = nu0
        fy = drift(theta, y, p)
        i = 0
        steps = 0
        cost = 0
        seg = 0.0
        n = 0
        for k in range(counts[r]):
            t = times[r, k]
            y, fy, i, steps, val = _euler_advance(drift, p, theta, y, fy, i, steps, h, t - seg)
            if not math.isfinite(val):
                _fail(info, r, theta, val, t, val)
                return NON_FINITE
            lam = rate(theta, val, p)
            if lam > lam_star or not lam >= 0.0:
                _fail(info, r, theta, val, t, lam)
                return RATE_BOUND
            if accept[r, k] * lam_star <= lam:
                theta = select(theta, val, marks[r, n], p)
                n += 1
                seg = t
                cost += steps
                y = val
                fy = drift(theta, y, p)
                i = 0
                steps = 0
        y, fy, i, steps, val = _euler_advance(drift, p, theta, y, fy, i, steps, h, horizon - seg)
        if not math.isfinite(val):
            _fail(info, r, theta, val, horizon, val)
            return NON_FINITE
        out_theta[r] = theta
        out_nu[r] = val
        out_cost[r] = cost + steps
    return OK


@njit(cache=True, nogil=True)
def flow_change_block(drift, rate, jump_prob, select, p, times, accept, marks, counts, horizon,
                      lam_star, h_fine, h_coarse, theta0, nu0,
                      out_theta, out_fine, out_coarse, out_logw, out_cost, info):
    """Fine Euler paths plus the coarse-flow reweighted leg on the same skeleton.

    The skeleton is thinned with the fine flow.  Along it a second value
    ``mu`` is transported with the coarse flow, and ``out_logw`` collects the
    log of the intensity and kernel ratios with the coarse flow on top.  A
    vanishing numerator gives ``-inf``.
    """
    for r in range(counts.shape[0]):
        theta = theta0
        yf = nu0
        ff = drift(theta, yf, p)
        i_f = 0
        s_f = 0
        yc = nu0
        fc = ff
        i_c = 0
        s_c = 0
        cost = 0
        seg = 0.0
        n = 0
        logw = 0.0
        zero = False
        for k in range(counts[r]):
            t = times[r, k]
            tau = t - seg
            yf, ff, i_f, s_f, vf = _euler_advance(drift, p, theta, yf, ff, i_f, s_f, h_fine, tau)
            yc, fc, i_c, s_c, vc = _euler_advance(drift, p, theta, yc, fc, i_c, s_c, h_coarse, tau)
            if not (math.isfinite(vf) and math.isfinite(vc)):
                _fail(info, r, theta, vf, t, vc)
                return NON_FINITE
            lf = rate(theta, vf, p)
            lc = rate(theta, vc, p)
            if lf > lam_star or not lf >= 0.0:
                _fail(info, r, theta, vf, t, lf)
                return RATE_BOUND
            if lc > lam_star or not lc >= 0.0:
                _fail(info, r, theta, vc, t, lc)
                return RATE_BOUND
            if accept[r, k] * lam_star <= lf:
                new = select(theta, vf, marks[r, n], p)
                qf = jump_prob(theta, vf, new, p)
                qc = jump_prob(theta, vc, new, p)
                if lf <= 0.0 or qf <= 0.0:
                    _fail(info, r, theta, vf, t, lf * qf)
                    return DEGENERATE_WEIGHT
                if lc <= 0.0 or qc <= 0.0:
                    zero = True
                else:
                    logw += math.log(lc) - math.log(lf) + math.log(qc) - math.log(qf)
                theta = new
                n += 1
                seg = t
                cost += s_f + s_c
                yf = vf
                ff = drift(theta, yf, p)
                i_f = 0
                s_f = 0
                yc = vc
                fc = drift(theta, yc, p)
                i_c = 0
                s_c = 0
            else:
                den = 1.0 - lf / lam_star
                num = 1.0 - lc / lam_star
                if den <= 0.0:
                    _fail(info, r, theta, vf, t, lf)
                    return DEGENERATE_WEIGHT
                if num <= 0.0:
                    zero = True
                else:
                    logw += math.log(num) - math.log(den)
        tau = horizon - seg
        yf, ff, i_f, s_f, vf = _euler_advance(drift, p, theta, yf, ff, i_f, s_f, h_fine, tau)
        yc, fc, i_c, s_c, vc = _euler_advance(drift, p, theta, yc, fc, i_c, s_c, h_coarse, tau)
        if not (math.isfinite(vf) and math.isfinite(vc)):
            _fail(info, r, theta, vf, horizon, vc)
            return NON_FINITE
        out_theta[r] = theta
        out_fine[r] = vf
        out_coarse[r] = vc
        out_logw[r] = -np.inf if zero else logw
        out_cost[r] = cost + s_f + s_c
    return OK


@njit(cache=True, nogil=True)
def _pick_row(row, u):
    # inverse CDF on a dense row, skipping zero entries
    acc = 0.0
    last = -1
    for j in range(row.shape[0]):
        if row[j] > 0.0:
            acc += row[j]
            last = j
            if u <= acc:
                return j
    return last


@njit(cache=True, nogil=True)
def aux_block(drift, rate, jump_prob, select, p, times, accept, marks, counts, horizon,
              lam_star, h_fine, h_coarse, legs, theta0, nu0, aux_kind, aux_rate, aux_kernel,
              vprop, out_theta, out_fine, out_coarse, out_logw_fine, out_logw_coarse,
              out_cost, info):
    """Skeleton from a mode-only or frozen-trajectory auxiliary, one or two weighted legs.

    With ``aux_kind == AUX_MODE_ONLY`` the auxiliary intensity and kernel are
    ``aux_rate[theta]`` and ``aux_kernel[theta]``.  With ``AUX_FROZEN`` they
    are the target's, evaluated at ``vprop[r, k]``, the deterministic
    trajectory at the proposal time.  Each leg carries its Euler value and its
    own log weight; ``legs == 1`` skips the coarse leg.
    """
    for r in range(counts.shape[0]):
        theta = theta0
        seg = 0.0
        n = 0
        cost = 0
        yf = nu0
        ff = drift(theta, yf, p)
        i_f = 0
        s_f = 0
        yc = nu0
        fc = ff
        i_c = 0
        s_c = 0
        lw_f = 0.0
        lw_c = 0.0
        zf = False
        zc = False
        vc = nu0
        for k in range(counts[r]):
            t = times[r, k]
            tau = t - seg
            if aux_kind == AUX_MODE_ONLY:
                lt = aux_rate[theta]
            else:
                lt = rate(theta, vprop[r, k], p)
            if lt > lam_star or not lt >= 0.0:
                _fail(info, r, theta, vprop[r, k] if aux_kind == AUX_FROZEN else np.nan, t, lt)
                return AUX_RATE_BOUND
            yf, ff, i_f, s_f, vf = _euler_advance(drift, p, theta, yf, ff, i_f, s_f, h_fine, tau)
            lf = rate(theta, vf, p)
            if not math.isfinite(vf):
                _fail(info, r, theta, vf, t, vf)
                return NON_FINITE
            if lf > lam_star or not lf >= 0.0:
                _fail(info, r, theta, vf, t, lf)
                return RATE_BOUND
            if legs == 2:
                yc, fc, i_c, s_c, vc = _euler_advance(drift, p, theta, yc, fc, i_c, s_c, h_coarse, tau)
                lc = rate(theta, vc, p)
                if not math.isfinite(vc):
                    _fail(info, r, theta, vc, t, vc)
                    return NON_FINITE
                if lc > lam_star or not lc >= 0.0:
                    _fail(info, r, theta, vc, t, lc)
                    return RATE_BOUND
            else:
                lc = lf
            if accept[r, k] * lam_star <= lt:
                if aux_kind == AUX_MODE_ONLY:
                    new = _pick_row(aux_kernel[theta], marks[r, n])
                    qt = aux_kernel[theta, new]
                else:
                    new = select(theta, vprop[r, k], marks[r, n], p)
                    qt = jump_prob(theta, vprop[r, k], new, p)
                if lt <= 0.0 or qt <= 0.0:
                    _fail(info, r, theta, np.nan, t, lt * qt)
                    return DEGENERATE_WEIGHT
                aux = math.log(lt) + math.log(qt)
                qf = jump_prob(theta, vf, new, p)
                if lf <= 0.0 or qf <= 0.0:
                    zf = True
                else:
                    lw_f += math.log(lf) + math.log(qf) - aux
                if legs == 2:
                    qc = jump_prob(theta, vc, new, p)
                    if lc <= 0.0 or qc <= 0.0:
                        zc = True
                    else:
                        lw_c += math.log(lc) + math.log(qc) - aux
                theta = new
                n += 1
                seg = t
                cost += s_f + s_c
                yf = vf
                ff = drift(theta, yf, p)
                i_f = 0
                s_f = 0
                if legs == 2:
                    yc = vc
                    fc = drift(theta, yc, p)
                    i_c = 0
                    s_c = 0
            else:
                den = 1.0 - lt / lam_star
                if den <= 0.0:
                    _fail(info, r, theta, np.nan, t, lt)
                    return DEGENERATE_WEIGHT
                num = 1.0 - lf / lam_star
                if num <= 0.0:
                    zf = True
                else:
                    lw_f += math.log(num) - math.log(den)
                if legs == 2:
                    num = 1.0 - lc / lam_star
                    if num <= 0.0:
                        zc = True
                    else:
                        lw_c += math.log(num) - math.log(den)
        tau = horizon - seg
        yf, ff, i_f, s_f, vf = _euler_advance(drift, p, theta, yf, ff, i_f, s_f, h_fine, tau)
        if legs == 2:
            yc, fc, i_c, s_c, vc = _euler_advance(drift, p, theta, yc, fc, i_c, s_c, h_coarse, tau)
        else:
            vc = vf
        if not (math.isfinite(vf) and math.isfinite(vc)):
            _fail(info, r, theta, vf, horizon, vc)
            return NON_FINITE
        out_theta[r] = theta
        out_fine[r] = vf
        out_coarse[r] = vc
        out_logw_fine[r] = -np.inf if zf else lw_f
        out_logw_coarse[r] = -np.inf if (zc or (legs == 1 and zf)) else (lw_c if legs == 2 else lw_f)
        out_cost[r] = cost + s_f + s_c
    return OK


@njit(cache=True, nogil=True)
def divergence_block(drift, rate, select, p, times, accept, marks, counts, horizon, lam_star,
                     h_fine, h_coarse, theta0, nu0, out_div, info):
    """First proposal index (1-based) at which two Euler skeletons part, 0 if never.

    Both paths scan the same proposals, so their ``(tau_n, theta_n)``
    sequences first differ at the earliest proposal where one accepts and
    the other does not, or where both accept and pick different modes.
    """
    for r in range(counts.shape[0]):
        theta = theta0
        yf = nu0
        ff = drift(theta, yf, p)
        i_f = 0
        s_f = 0
        yc = nu0
        fc = ff
        i_c = 0
        s_c = 0
        seg = 0.0
        n = 0
        out_div[r] = 0
        for k in range(counts[r]):
            t = times[r, k]
            yf, ff, i_f, s_f, vf = _euler_advance(drift, p, theta, yf, ff, i_f, s_f, h_fine, t - seg)
            yc, fc, i_c, s_c, vc = _euler_advance(drift, p, theta, yc, fc, i_c, s_c, h_coarse, t - seg)
            if not (math.isfinite(vf) and math.isfinite(vc)):
                _fail(info, r, theta, vf, t, vc)
                return NON_FINITE
            lf = rate(theta, vf, p)
            lc = rate(theta, vc, p)
            if lf > lam_star or not lf >= 0.0:
                _fail(info, r, theta, vf, t, lf)
                return RATE_BOUND
            if lc > lam_star or not lc >= 0.0:
                _fail(info, r, theta, vc, t, lc)
                return RATE_BOUND
            acc_f = accept[r, k] * lam_star <= lf
            acc_c = accept[r, k] * lam_star <= lc
            if acc_f != acc_c:
                out_div[r] = k + 1
                break
            if acc_f:
                u = marks[r, n]
                new_f = select(theta, vf, u, p)
                if new_f != select(theta, vc, u, p):
                    out_div[r] = k + 1
                    break
                theta = new_f
                n += 1
                seg = t
                yf, yc = vf, vc
                ff = drift(theta, yf, p)
                fc = drift(theta, yc, p)
                i_f = i_c = s_f = s_c = 0
    return OK
