import numpy as np
import pytest
from scipy import stats

from pdmp.errors import InvalidArgument
from pdmp.rng import StreamKey, derive_stream, sample_trace, sample_trace_block


def test_same_key_same_draws():
    a = derive_stream(StreamKey(7, (1, 2))).random(1000)
    b = derive_stream(StreamKey(7, (1, 2))).random(1000)
    assert np.array_equal(a, b)


def test_path_index_changes_stream():
    a = derive_stream(StreamKey(7, (1, 2))).random(1000)
    b = derive_stream(StreamKey(7, (1, 3))).random(1000)
    assert np.any(a != b)


def test_distinct_seeds_uncorrelated():
    a = derive_stream(StreamKey(1, (0,))).random(100_000)
    b = derive_stream(StreamKey(2, (0,))).random(100_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.02


def test_child_substreams_are_independent_of_siblings():
    key = StreamKey(3)
    a = derive_stream(key.child(0)).random(10)
    derive_stream(key.child(1)).random(10_000)
    assert np.array_equal(a, derive_stream(key.child(0)).random(10))


def test_int_seed_shorthand():
    assert np.array_equal(derive_stream(5, (1,)).random(5), derive_stream(StreamKey(5, (1,))).random(5))


@pytest.mark.parametrize("seed,path", [(-1, ()), (2**64, ()), (0, (-1,))])
def test_bad_keys(seed, path):
    with pytest.raises(InvalidArgument):
        StreamKey(seed, path)


def test_zero_horizon_is_empty():
    tr = sample_trace(derive_stream(1), 10.0, 0.0)
    assert len(tr) == 0


@pytest.mark.parametrize("lam,T", [(0.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (np.inf, 1.0)])
def test_trace_arguments(lam, T):
    with pytest.raises(InvalidArgument):
        sample_trace(derive_stream(1), lam, T)


def test_trace_structure():
    tr = sample_trace(derive_stream(StreamKey(11, (4,))), 10.0, 30.0)
    t = tr.poisson_times
    assert np.all(np.diff(t) > 0) and t[0] > 0 and t[-1] <= 30.0
    assert len(tr.uniforms_accept) == len(t) == len(tr.uniforms_mark)
    assert np.all((tr.uniforms_accept >= 0) & (tr.uniforms_accept < 1))
    assert tr.time(0) == 0.0 and tr.time(1) == t[0]


def test_trace_replay_bit_exact():
    a = sample_trace(derive_stream(StreamKey(9, (1, 1))), 10.0, 30.0)
    b = sample_trace(derive_stream(StreamKey(9, (1, 1))), 10.0, 30.0)
    assert a.poisson_times.tobytes() == b.poisson_times.tobytes()
    assert a.uniforms_accept.tobytes() == b.uniforms_accept.tobytes()


def test_marks_do_not_shift_acceptance():
    # the acceptance stream is its own child, so its values are fixed by the key alone
    s1, s2 = derive_stream(StreamKey(2)), derive_stream(StreamKey(2))
    s2.marks.random(50)
    assert np.array_equal(s1.accept.random(20), s2.accept.random(20))


def test_count_law_moments():
    blk = sample_trace_block(derive_stream(StreamKey(21)), 10.0, 30.0, 10_000)
    c = blk.counts
    assert abs(c.mean() - 300) < 3 * np.sqrt(300 / 10_000)
    assert abs(c.var() / 300 - 1) < 0.1


def test_gaps_exponential_ks():
    tr = sample_trace(derive_stream(StreamKey(22)), 10.0, 2000.0)
    gaps = np.diff(np.concatenate([[0.0], tr.poisson_times]))
    assert stats.kstest(gaps, "expon", args=(0, 0.1)).pvalue > 0.01


def test_block_extension_keeps_rows_valid():
    # a tiny initial width forces the extension branch
    blk = sample_trace_block(derive_stream(StreamKey(23)), 50.0, 1.0, 200)
    for i in range(len(blk)):
        tr = blk.trace(i)
        assert np.all(np.diff(tr.poisson_times) > 0)
        assert blk.times[i, blk.counts[i]] > 1.0
