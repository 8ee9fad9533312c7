import numpy as np
import pytest

from pdmp.errors import InvalidArgument, RateBoundViolation
from pdmp.models import morris_lecar as ml
from pdmp.models import telegraph as tg
from pdmp.reweight import AuxiliarySpec
from pdmp.rng import StreamKey
from pdmp.samplers import JitSampler, PathSampler


@pytest.fixture(scope="module")
def ml_pair(ml_params, ml_x0, ml_jit):
    T = 3.0
    aux = {"case1": ml.case1_spec(ml_params), "case2": ml.case2_spec(ml_params, horizon=T)}

    def make(kind):
        a = aux.get(kind)
        return (JitSampler(ml_jit, ml_x0, T, 10.0, aux=a, chunk=16),
                PathSampler(ml.ml_characteristics(ml_params), ml_x0, T, aux=a, chunk=16))
    return make


@pytest.mark.parametrize("scheme", ["plain", "case1", "case2"])
def test_single_matches_reference(ml_pair, scheme):
    jit, ref = ml_pair(scheme)
    a = jit.single(0.1, 40, StreamKey(1), scheme)
    b = ref.single(0.1, 40, StreamKey(1), scheme)
    assert np.array_equal(a.sample.theta, b.sample.theta)
    np.testing.assert_allclose(a.sample.nu, b.sample.nu, rtol=1e-12)
    np.testing.assert_allclose(a.sample.weight, b.sample.weight, rtol=1e-10)
    assert np.array_equal(a.cost, b.cost)


@pytest.mark.parametrize("scheme", ["plain", "case1", "case2", "case3"])
def test_pair_matches_reference(ml_pair, scheme):
    jit, ref = ml_pair(scheme)
    a = jit.pair(0.05, 0.2, 40, StreamKey(2), scheme)
    b = ref.pair(0.05, 0.2, 40, StreamKey(2), scheme)
    for x, y in ((a.fine, b.fine), (a.coarse, b.coarse)):
        assert np.array_equal(x.theta, y.theta)
        np.testing.assert_allclose(x.nu, y.nu, rtol=1e-12)
        np.testing.assert_allclose(x.weight, y.weight, rtol=1e-10)
        np.testing.assert_allclose(x.value, y.value, rtol=1e-10)


@pytest.mark.parametrize("scheme", ["plain", "case1", "case2", "case3"])
def test_equal_steps_bit_identical(ml_pair, scheme):
    jit, _ = ml_pair(scheme)
    b = jit.pair(0.1, 0.1, 100, StreamKey(3), scheme)
    assert b.fine.value.tobytes() == b.coarse.value.tobytes()
    assert np.all(b.difference == 0.0)


def test_threads_do_not_change_results(ml_x0, ml_jit):
    one = JitSampler(ml_jit, ml_x0, 5.0, 10.0, chunk=64, threads=1)
    many = JitSampler(ml_jit, ml_x0, 5.0, 10.0, chunk=64, threads=3)
    a = one.pair(0.05, 0.1, 500, StreamKey(4), "case3")
    b = many.pair(0.05, 0.1, 500, StreamKey(4), "case3")
    assert a.fine.value.tobytes() == b.fine.value.tobytes()
    assert a.coarse.value.tobytes() == b.coarse.value.tobytes()
    assert np.array_equal(a.cost, b.cost)


def test_prefix_property(ml_x0, ml_jit):
    s = JitSampler(ml_jit, ml_x0, 5.0, 10.0, chunk=64)
    a = s.single(0.1, 100, StreamKey(5)).value
    b = s.single(0.1, 300, StreamKey(5)).value
    assert np.array_equal(a, b[:100])


def test_pair_cost_counts_both_legs(ml_x0, ml_jit):
    s = JitSampler(ml_jit, ml_x0, 5.0, 10.0)
    f = s.single(0.05, 50, StreamKey(6)).cost
    c = s.single(0.2, 50, StreamKey(6)).cost
    assert np.array_equal(s.pair(0.05, 0.2, 50, StreamKey(6)).cost, f + c)
    # without jumps a path would cost exactly T/h updates; restarts only shorten cells
    assert np.all(f <= 5.0 / 0.05 + 1)


def test_telegraph_jit_matches_reference():
    params = tg.TelegraphParams(a0=1.0, a1=2.0, c0=1.0, c1=-1.0, kappa=0.5)
    jit = JitSampler(tg.jit_model(params), (0, 1.0), 4.0, 5.0, chunk=32)
    ref = PathSampler(tg.telegraph_characteristics(params), (0, 1.0), 4.0, chunk=32)
    a, b = jit.pair(0.05, 0.1, 64, StreamKey(7)), ref.pair(0.05, 0.1, 64, StreamKey(7))
    np.testing.assert_allclose(a.fine.nu, b.fine.nu, rtol=1e-12)
    np.testing.assert_allclose(a.coarse.nu, b.coarse.nu, rtol=1e-12)


def test_scheme_checks(ml_x0, ml_jit):
    s = JitSampler(ml_jit, ml_x0, 5.0, 10.0)
    with pytest.raises(InvalidArgument):
        s.single(0.1, 10, StreamKey(1), "case2")
    with pytest.raises(InvalidArgument):
        s.single(0.1, 10, StreamKey(1), "bogus")
    with pytest.raises(InvalidArgument):
        s.pair(0.0, 0.1, 10, StreamKey(1))
    with pytest.raises(InvalidArgument):
        JitSampler(ml_jit, (500, -20.0), 5.0, 10.0)


def test_rate_bound_violation_surfaces(ml_x0, ml_jit):
    s = JitSampler(ml_jit, ml_x0, 5.0, 0.5)
    with pytest.raises(RateBoundViolation):
        s.single(0.1, 10, StreamKey(1))


def test_zero_horizon_returns_initial_state(ml_x0, ml_jit):
    s = JitSampler(ml_jit, ml_x0, 0.0, 10.0)
    b = s.single(0.1, 5, StreamKey(1))
    assert np.all(b.sample.nu == ml_x0.nu) and np.all(b.cost == 0)


def test_case1_weights_positive_and_finite(ml_params, ml_x0, ml_jit):
    s = JitSampler(ml_jit, ml_x0, 5.0, 10.0, aux=ml.case1_spec(ml_params))
    w = s.single(0.1, 2000, StreamKey(8), "case1").sample.weight
    assert np.all(np.isfinite(w)) and np.all(w > 0)
