"""Bulk sampling of single and coupled Euler paths.

Samples are produced in fixed-size chunks.  Chunk ``c`` of a request keyed
by ``key`` draws its thinning traces from ``key.child(c)``, so the output
depends only on the key and the sample count, never on the number of
worker threads.

Two interchangeable samplers are provided.  :class:`JitSampler` runs the
compiled kernels and is what the estimators use.  :class:`PathSampler` goes
through :func:`pdmp.core.simulate_path` and the pure-Python weights of
:mod:`pdmp.reweight`.  It is slow but simple, and the tests use it as the
reference for the compiled route.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .core import Characteristics, MarkState, simulate_path
from .errors import DegenerateWeight, InvalidArgument, NumericalFailure, RateBoundViolation
from .flows import euler_polygon
from .kernels import JitModel
from .reweight import AuxiliarySpec, WeightedSample, coupled_weighted_pair, weighted_sample
from .rng import StreamKey, derive_stream, sample_trace_block

DEFAULT_CHUNK = 2048
SCHEMES = ("plain", "case1", "case2", "case3")


def identity_functional(theta, nu):
    return nu


@dataclass
class SampleBatch:
    """Terminal states, weights and ``F``-values of a set of paths.

    ``value`` already includes the weight: ``value = F(theta, nu) * weight``.
    """

    theta: np.ndarray
    nu: np.ndarray
    weight: np.ndarray
    value: np.ndarray

    def __len__(self):
        return len(self.value)


@dataclass
class PairBatch:
    fine: SampleBatch
    coarse: SampleBatch
    cost: np.ndarray

    @property
    def difference(self) -> np.ndarray:
        return self.fine.value - self.coarse.value

    def __len__(self):
        return len(self.cost)


@dataclass
class SingleBatch:
    sample: SampleBatch
    cost: np.ndarray

    @property
    def value(self):
        return self.sample.value

    def __len__(self):
        return len(self.cost)


def _key(key) -> StreamKey:
    return key if isinstance(key, StreamKey) else StreamKey(int(key))


def _chunks(n, chunk):
    return [(c, c * chunk, min(chunk, n - c * chunk)) for c in range(math.ceil(n / chunk))]


class _Base:
    def __init__(self, x0, horizon: float, rate_bound: float, aux: Optional[AuxiliarySpec] = None,
                 functional: Callable = identity_functional, chunk: int = DEFAULT_CHUNK,
                 threads: int = 1):
        if not horizon >= 0:
            raise InvalidArgument(f"horizon must be non-negative, got {horizon!r}")
        if not rate_bound > 0:
            raise InvalidArgument(f"rate bound must be positive, got {rate_bound!r}")
        if chunk < 1 or threads < 1:
            raise InvalidArgument("chunk and threads must be at least 1")
        self.x0 = MarkState(int(x0[0]), float(x0[1]))
        self.horizon = float(horizon)
        self.rate_bound = float(rate_bound)
        self.aux = aux
        self.functional = functional
        self.chunk = int(chunk)
        self.threads = int(threads)

    def _check(self, scheme, *steps):
        if scheme not in SCHEMES:
            raise InvalidArgument(f"unknown scheme {scheme!r}")
        if scheme != "plain" and scheme != "case3":
            if self.aux is None or self.aux.kind != scheme:
                raise InvalidArgument(f"scheme {scheme} needs a matching AuxiliarySpec")
        for h in steps:
            if not h > 0:
                raise InvalidArgument(f"step sizes must be positive, got {h!r}")

    def _block(self, key, c, m):
        return sample_trace_block(derive_stream(key.child(c)), self.rate_bound, self.horizon, m)

    def _run(self, n, key, work):
        n = int(n)
        if n < 0:
            raise InvalidArgument(f"sample count must be non-negative, got {n}")
        key = _key(key)
        jobs = _chunks(n, self.chunk)
        if self.threads == 1 or len(jobs) < 2:
            parts = [work(key, c, m) for c, _, m in jobs]
        else:
            with ThreadPoolExecutor(self.threads) as pool:
                parts = list(pool.map(lambda j: work(key, j[0], j[2]), jobs))
        return parts

    def single(self, h, n, key, scheme="plain") -> SingleBatch:
        """``n`` samples of ``F(X_h)`` (times the weight for cases 1 and 2)."""
        self._check(scheme, h)
        if scheme == "case3":
            scheme = "plain"
        parts = self._run(n, key, lambda k, c, m: self._single_chunk(h, k, c, m, scheme))
        return SingleBatch(_cat_samples([p[0] for p in parts]), _cat([p[1] for p in parts], np.int64))

    def pair(self, h_fine, h_coarse, n, key, scheme="plain") -> PairBatch:
        """``n`` coupled pairs ``(F(X_{h_fine}), F(X_{h_coarse}))`` on shared traces."""
        self._check(scheme, h_fine, h_coarse)
        parts = self._run(n, key, lambda k, c, m: self._pair_chunk(h_fine, h_coarse, k, c, m, scheme))
        return PairBatch(
            _cat_samples([p[0] for p in parts]),
            _cat_samples([p[1] for p in parts]),
            _cat([p[2] for p in parts], np.int64),
        )


def _cat(arrays, dtype=float):
    return np.concatenate(arrays).astype(dtype, copy=False) if arrays else np.empty(0, dtype)


def _cat_samples(batches):
    return SampleBatch(
        _cat([b.theta for b in batches], np.int64),
        _cat([b.nu for b in batches]),
        _cat([b.weight for b in batches]),
        _cat([b.value for b in batches]),
    )


class JitSampler(_Base):
    """Compiled sampler for a :class:`~pdmp.kernels.JitModel`.

    Parameters
    ----------
    model : JitModel
    x0 : (theta, nu)
    horizon, rate_bound : float
    aux : AuxiliarySpec, optional
        Needed for the ``case1`` and ``case2`` schemes.
    functional : callable
        Vectorised ``F(theta, nu)``; the default returns ``nu``.
    chunk : int
        Traces per chunk (part of the stream layout, so changing it changes
        the samples).
    threads : int
        Worker threads; does not affect results.
    """

    def __init__(self, model: JitModel, x0, horizon, rate_bound, aux=None,
                 functional=identity_functional, chunk=DEFAULT_CHUNK, threads=1):
        super().__init__(x0, horizon, rate_bound, aux, functional, chunk, threads)
        self.model = model
        if not 0 <= self.x0.theta < model.n_modes:
            raise InvalidArgument(f"initial mode {self.x0.theta} outside 0..{model.n_modes - 1}")
        if aux is not None and aux.kind == "case1":
            aux.check_bound(self.rate_bound)
            if aux.aux_rate.size != model.n_modes:
                raise InvalidArgument("aux_rate must have one entry per mode")

    def _raise(self, status, info):
        row, theta, nu, t, value = info
        if status == kernels.RATE_BOUND:
            raise RateBoundViolation(int(theta), nu, t, value, self.rate_bound)
        if status == kernels.AUX_RATE_BOUND:
            raise RateBoundViolation(int(theta), nu, t, value, self.rate_bound)
        if status == kernels.DEGENERATE_WEIGHT:
            raise DegenerateWeight(f"auxiliary factor {value!r} at theta={int(theta)}, t={t!r}")
        raise NumericalFailure("non-finite Euler state", t=t)

    def _batch(self, theta, nu, logw):
        w = np.exp(logw)
        return SampleBatch(theta, nu, w, np.asarray(self.functional(theta, nu), dtype=float) * w)

    def _plain(self, blk, h):
        m = self.model
        n = len(blk)
        th, nu, cost = np.empty(n, np.int64), np.empty(n), np.empty(n, np.int64)
        info = np.zeros(5)
        status = kernels.plain_block(
            m.drift, m.rate, m.select, m.params, blk.times, blk.accept, blk.marks, blk.counts,
            blk.horizon, blk.rate_bound, float(h), self.x0.theta, self.x0.nu, th, nu, cost, info)
        if status:
            self._raise(status, info)
        return th, nu, cost

    def divergence(self, h_fine, h_coarse, n, key) -> np.ndarray:
        """Per-trace proposal index at which plain Euler skeletons first differ (0: never)."""
        self._check("plain", h_fine, h_coarse)
        m = self.model

        def work(k, c, size):
            blk = self._block(k, c, size)
            out = np.empty(size, np.int64)
            info = np.zeros(5)
            status = kernels.divergence_block(
                m.drift, m.rate, m.select, m.params, blk.times, blk.accept, blk.marks, blk.counts,
                blk.horizon, blk.rate_bound, float(h_fine), float(h_coarse), self.x0.theta,
                self.x0.nu, out, info)
            if status:
                self._raise(status, info)
            return out

        return _cat(self._run(n, key, work), np.int64)

    def _vprop(self, blk):
        v = self.aux.trajectory
        return np.asarray(v(np.minimum(blk.times, blk.horizon)), dtype=float)

    def _aux(self, blk, h_f, h_c, legs):
        m = self.model
        n = len(blk)
        th = np.empty(n, np.int64)
        vf, vc, lf, lc = (np.empty(n) for _ in range(4))
        cost = np.empty(n, np.int64)
        info = np.zeros(5)
        if self.aux.kind == "case1":
            kind, rate, kern, vprop = kernels.AUX_MODE_ONLY, self.aux.aux_rate, self.aux.aux_kernel, np.zeros((1, 1))
        else:
            kind, rate, kern, vprop = kernels.AUX_FROZEN, np.zeros(1), np.zeros((1, 1)), self._vprop(blk)
        status = kernels.aux_block(
            m.drift, m.rate, m.jump_prob, m.select, m.params, blk.times, blk.accept, blk.marks,
            blk.counts, blk.horizon, blk.rate_bound, float(h_f), float(h_c), legs, self.x0.theta,
            self.x0.nu, kind, rate, kern, vprop, th, vf, vc, lf, lc, cost, info)
        if status:
            self._raise(status, info)
        return th, vf, vc, lf, lc, cost

    def _single_chunk(self, h, key, c, m, scheme):
        blk = self._block(key, c, m)
        if scheme == "plain":
            th, nu, cost = self._plain(blk, h)
            return self._batch(th, nu, np.zeros(m)), cost
        th, vf, _, lf, _, cost = self._aux(blk, h, h, 1)
        return self._batch(th, vf, lf), cost

    def _pair_chunk(self, h_f, h_c, key, c, m, scheme):
        blk = self._block(key, c, m)
        if scheme == "plain":
            th_f, nu_f, cost_f = self._plain(blk, h_f)
            th_c, nu_c, cost_c = self._plain(blk, h_c)
            zero = np.zeros(m)
            return self._batch(th_f, nu_f, zero), self._batch(th_c, nu_c, zero), cost_f + cost_c
        if scheme == "case3":
            md = self.model
            th = np.empty(m, np.int64)
            vf, vc, lw = np.empty(m), np.empty(m), np.empty(m)
            cost = np.empty(m, np.int64)
            info = np.zeros(5)
            status = kernels.flow_change_block(
                md.drift, md.rate, md.jump_prob, md.select, md.params, blk.times, blk.accept,
                blk.marks, blk.counts, blk.horizon, blk.rate_bound, float(h_f), float(h_c),
                self.x0.theta, self.x0.nu, th, vf, vc, lw, cost, info)
            if status:
                self._raise(status, info)
            return self._batch(th, vf, np.zeros(m)), self._batch(th, vc, lw), cost
        th, vf, vc, lf, lc, cost = self._aux(blk, h_f, h_c, 2)
        return self._batch(th, vf, lf), self._batch(th, vc, lc), cost


class PathSampler(_Base):
    """Reference sampler built on :class:`~pdmp.core.Characteristics`.

    ``target`` supplies the intensity, kernel and vector field; its flow is
    replaced by the Euler polygon of the requested step.  Cost is counted in
    Euler updates as for :class:`JitSampler`.
    """

    def __init__(self, target: Characteristics, x0, horizon, aux=None,
                 functional=identity_functional, chunk=DEFAULT_CHUNK, threads=1):
        super().__init__(x0, horizon, target.rate_bound, aux, functional, chunk, 1)
        self.target = target

    def _traces(self, key, c, m):
        blk = self._block(key, c, m)
        return [blk.trace(i) for i in range(m)]

    def _pack(self, samples):
        th = np.array([s.terminal.theta for s in samples], dtype=np.int64)
        nu = np.array([s.terminal.nu for s in samples], dtype=float)
        w = np.array([s.weight for s in samples], dtype=float)
        val = np.array([s.value for s in samples], dtype=float)
        return SampleBatch(th, nu, w, val)

    def _single_chunk(self, h, key, c, m, scheme):
        out, cost = [], []
        for tr in self._traces(key, c, m):
            if scheme == "plain":
                chars = self.target.with_flow(euler_polygon(self.target.flow.vector_field, h))
                sk = simulate_path(chars, tr, self.x0)
                s = WeightedSample(self.functional(*sk.terminal), 1.0, sk, sk.terminal)
            else:
                s = weighted_sample(self.target, self.aux, tr, h, self.x0, self.functional)
            out.append(s)
            cost.append(s.skeleton.cost)
        return self._pack(out), np.array(cost, dtype=np.int64)

    def _pair_chunk(self, h_f, h_c, key, c, m, scheme):
        fine, coarse = [], []
        for tr in self._traces(key, c, m):
            if scheme == "plain":
                pair = []
                for h in (h_f, h_c):
                    chars = self.target.with_flow(euler_polygon(self.target.flow.vector_field, h))
                    sk = simulate_path(chars, tr, self.x0)
                    pair.append(WeightedSample(self.functional(*sk.terminal), 1.0, sk, sk.terminal))
                f, g = pair
            else:
                spec = self.aux if scheme != "case3" else AuxiliarySpec("case3")
                f, g = coupled_weighted_pair(self.target, spec, tr, h_f, h_c, self.x0, self.functional)
            fine.append(f)
            coarse.append(g)
        # the reference route does not replay the coarse cost; report fine-path cost only
        cost = np.array([f.skeleton.cost for f in fine], dtype=np.int64)
        return self._pack(fine), self._pack(coarse), cost
