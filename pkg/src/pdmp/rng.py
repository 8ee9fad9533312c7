"""Replayable randomness for thinning.

Every random quantity in a simulation is addressed by a :class:`StreamKey`,
a 64-bit seed plus a path of non-negative integers such as
``(replication, level, chunk)``.  Keys are hashed with
:class:`numpy.random.SeedSequence` and drive counter-based Philox
generators, so any substream can be rebuilt directly from its key without
fast-forwarding a parent generator.

A key yields three independent child generators: one for the Poisson
proposal gaps, one for the acceptance uniforms ``U_k`` and one for the mark
uniforms ``V_n``.  Keeping the marks on their own child means drawing more
of them never shifts the acceptance sequence, and vice versa.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

_SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class StreamKey:
    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _SEED_MAX:
            raise InvalidArgument(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        path = tuple(int(i) for i in self.path)
        if any(i < 0 for i in path):
            raise InvalidArgument(f"stream path indices must be non-negative, got {path}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "path", path)

    def child(self, *indices: int) -> StreamKey:
        return StreamKey(self.seed, self.path + tuple(indices))


class RandomStream:
    """The three generators attached to one :class:`StreamKey`.

    ``random`` draws from the proposal generator, which makes a stream usable
    as a plain uniform source in tests and utilities.
    """

    def __init__(self, key: StreamKey):
        self.key = key
        root = np.random.SeedSequence(key.seed, spawn_key=key.path)
        ss_times, ss_accept, ss_marks = root.spawn(3)
        self.proposals = np.random.Generator(np.random.Philox(ss_times))
        self.accept = np.random.Generator(np.random.Philox(ss_accept))
        self.marks = np.random.Generator(np.random.Philox(ss_marks))

    def random(self, size=None):
        return self.proposals.random(size)

    def __repr__(self):
        return f"RandomStream({self.key!r})"


def derive_stream(key: StreamKey | int, path=()) -> RandomStream:
    """Build the stream for ``key``; a bare integer is taken as the seed."""
    if not isinstance(key, StreamKey):
        key = StreamKey(key, tuple(path))
    return RandomStream(key)


@dataclass(frozen=True)
class ThinningTrace:
    """Shared randomness of one thinning construction on ``(0, horizon]``.

    ``poisson_times[k-1]`` is the proposal time ``T*_k``.  Acceptance uniform
    ``U_k`` sits at the same position.  ``uniforms_mark[n-1]`` is the mark
    uniform ``V_n`` used at the n-th accepted jump; there are as many marks as
    proposals, which bounds the number of jumps.
    """

    horizon: float
    rate_bound: float
    poisson_times: np.ndarray
    uniforms_accept: np.ndarray
    uniforms_mark: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.poisson_times)

    def time(self, k: int) -> float:
        """Proposal time ``T*_k`` with the convention ``T*_0 = 0``."""
        return 0.0 if k == 0 else float(self.poisson_times[k - 1])


@dataclass(frozen=True)
class TraceBlock:
    """``n`` independent traces stored as padded row arrays.

    Row ``i`` uses the first ``counts[i]`` columns of ``times`` and
    ``accept``; entries past the count lie beyond the horizon and are never
    read by the simulators.
    """

    horizon: float
    rate_bound: float
    times: np.ndarray
    accept: np.ndarray
    marks: np.ndarray
    counts: np.ndarray

    def __len__(self):
        return len(self.counts)

    def trace(self, i: int) -> ThinningTrace:
        m = int(self.counts[i])
        return ThinningTrace(
            self.horizon,
            self.rate_bound,
            self.times[i, :m].copy(),
            self.accept[i, :m].copy(),
            self.marks[i, :m].copy(),
        )


def _check_trace_args(rate_bound, horizon):
    if not (rate_bound > 0 and math.isfinite(rate_bound)):
        raise InvalidArgument(f"rate bound must be positive and finite, got {rate_bound!r}")
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise InvalidArgument(f"horizon must be non-negative and finite, got {horizon!r}")


def sample_trace_block(stream: RandomStream, rate_bound: float, horizon: float, n: int) -> TraceBlock:
    """Draw ``n`` traces of a Poisson(``rate_bound``) proposal process.

    Gaps are ``-log(1 - u) / rate_bound`` accumulated along each row.  The
    row width starts at the mean count plus eight standard deviations and is
    extended for the whole block, deterministically, in the rare event that
    some row has not yet passed the horizon.
    """
    _check_trace_args(rate_bound, horizon)
    n = int(n)
    if n < 0:
        raise InvalidArgument(f"block size must be non-negative, got {n}")
    mean = rate_bound * horizon
    width = int(mean + 8.0 * math.sqrt(mean) + 8)
    times = np.cumsum(-np.log1p(-stream.proposals.random((n, width))) / rate_bound, axis=1)
    while n and times[:, -1].min() <= horizon:
        more = -np.log1p(-stream.proposals.random((n, width))) / rate_bound
        more = np.cumsum(more, axis=1) + times[:, -1:]
        times = np.concatenate([times, more], axis=1)
    counts = np.count_nonzero(times <= horizon, axis=1).astype(np.int64)
    w = times.shape[1]
    accept = stream.accept.random((n, w))
    marks = stream.marks.random((n, w))
    return TraceBlock(float(horizon), float(rate_bound), times, accept, marks, counts)


def sample_trace(stream: RandomStream, rate_bound: float, horizon: float) -> ThinningTrace:
    """One proposal trace on ``(0, horizon]``; a zero horizon gives an empty trace."""
    return sample_trace_block(stream, rate_bound, horizon, 1).trace(0)
