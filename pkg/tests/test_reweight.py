import math

import numpy as np
import pytest

from pdmp.core import evaluate_state, simulate_path
from pdmp.errors import DegenerateWeight, InvalidArgument
from pdmp.flows import euler_polygon
from pdmp.models import morris_lecar as ml
from pdmp.models import telegraph as tg
from pdmp.reweight import (AuxiliarySpec, auxiliary_characteristics, coupled_weighted_pair, envelope,
                           weight_flow_change, weight_mode_auxiliary, weighted_sample)
from pdmp.rng import StreamKey, ThinningTrace, derive_stream, sample_trace, sample_trace_block

FLIP = np.array([[0.0, 1.0], [1.0, 0.0]])


def traces(seed, lam, T, n):
    blk = sample_trace_block(derive_stream(StreamKey(seed)), lam, T, n)
    return [blk.trace(i) for i in range(n)]


def empty_trace(T=3.0, lam=5.0):
    e = np.empty(0)
    return ThinningTrace(T, lam, e, e, e)


def test_no_proposals_unit_weight(ml_params, ml_x0):
    target = ml.ml_characteristics(ml_params, 0.1)
    tr = empty_trace(3.0, 10.0)
    for spec in (ml.case1_spec(ml_params), ml.case2_spec(ml_params, horizon=3.0)):
        sk = simulate_path(auxiliary_characteristics(spec, target), tr, ml_x0)
        assert weight_mode_auxiliary(sk, tr, target, spec) == 1.0
    sk = simulate_path(target, tr, ml_x0)
    assert weight_flow_change(sk, tr, target, euler_polygon(target.flow.vector_field, 0.5))[1] == 1.0


def test_zero_jump_weight_is_tail_product():
    # aux rate 1 never fires on this trace only if all U are large; build one by hand
    params = tg.TelegraphParams(a0=2.0, a1=2.0)
    target = tg.telegraph_characteristics(params, rate_bound=5.0)
    spec = AuxiliarySpec("case1", aux_rate=[1.0, 1.0], aux_kernel=FLIP)
    times = np.array([0.4, 1.1, 2.5])
    tr = ThinningTrace(3.0, 5.0, times, np.array([0.9, 0.95, 0.5]), np.zeros(3))
    sk = simulate_path(auxiliary_characteristics(spec, target), tr, (0, 0.0))
    assert sk.jump_count == 0
    expected = ((1 - 2 / 5) / (1 - 1 / 5)) ** 3
    assert weight_mode_auxiliary(sk, tr, target, spec) == pytest.approx(expected, rel=1e-14)


def test_auxiliary_equal_to_target_gives_unit_weights():
    params = tg.TelegraphParams(a0=1.0, a1=3.0)
    target = tg.telegraph_characteristics(params, rate_bound=4.0)
    spec = AuxiliarySpec("case1", aux_rate=[1.0, 3.0], aux_kernel=FLIP)
    for tr in traces(1, 4.0, 5.0, 100):
        sk = simulate_path(auxiliary_characteristics(spec, target), tr, (0, 0.0))
        assert weight_mode_auxiliary(sk, tr, target, spec) == pytest.approx(1.0, abs=1e-13)


def test_case1_weights_have_unit_mean_on_telegraph():
    params = tg.TelegraphParams(a0=1.0, a1=3.0)
    target = tg.telegraph_characteristics(params, rate_bound=4.0)
    spec = AuxiliarySpec("case1", aux_rate=[2.0, 2.0], aux_kernel=FLIP)
    w = np.array([weighted_sample(target, spec, tr, 0.1, (0, 0.0)).weight for tr in traces(2, 4.0, 2.0, 20_000)])
    assert abs(w.mean() - 1) < 3 * w.std(ddof=1) / math.sqrt(len(w))


def test_target_zero_factor_gives_zero_weight():
    # the auxiliary may stay put, which the flipping target never does
    params = tg.TelegraphParams(a0=1.0, a1=1.0)
    target = tg.telegraph_characteristics(params, rate_bound=4.0)
    spec = AuxiliarySpec("case1", aux_rate=[1.0, 1.0], aux_kernel=np.full((2, 2), 0.5))
    w = np.array([weighted_sample(target, spec, tr, 0.1, (0, 0.0)).weight for tr in traces(3, 4.0, 2.0, 20_000)])
    assert np.any(w == 0.0) and np.all(w >= 0)
    assert abs(w.mean() - 1) < 3 * w.std(ddof=1) / math.sqrt(len(w))


def test_auxiliary_zero_factor_is_degenerate():
    params = tg.TelegraphParams(a0=1.0, a1=1.0)
    target = tg.telegraph_characteristics(params, rate_bound=4.0)
    stay = AuxiliarySpec("case1", aux_rate=[1.0, 1.0], aux_kernel=np.eye(2))
    # a skeleton the auxiliary could never have produced
    for tr in traces(4, 4.0, 5.0, 20):
        sk = simulate_path(target, tr, (0, 0.0))
        if sk.jump_count:
            with pytest.raises(DegenerateWeight):
                weight_mode_auxiliary(sk, tr, target, stay)
            return
    pytest.fail("no trace with a jump")


def test_spec_validation():
    with pytest.raises(InvalidArgument):
        AuxiliarySpec("case4")
    with pytest.raises(InvalidArgument):
        AuxiliarySpec("case1", aux_rate=[1.0, 0.0], aux_kernel=FLIP)
    with pytest.raises(InvalidArgument):
        AuxiliarySpec("case1", aux_rate=[1.0, 1.0], aux_kernel=[[0.5, 0.4], [0, 1]])
    with pytest.raises(InvalidArgument):
        AuxiliarySpec("case2")
    spec = AuxiliarySpec("case1", aux_rate=[1.0, 5.0], aux_kernel=FLIP)
    with pytest.raises(InvalidArgument):
        spec.check_bound(5.0)


def test_envelope_formula():
    spec = AuxiliarySpec("case1", aux_rate=[1.0, 2.0], aux_kernel=[[0.25, 0.75], [1.0, 0.0]])
    assert spec.kernel_floor == 0.25
    assert envelope(spec, 4.0, 3) == pytest.approx((0.25 * 0.25 * 0.5) ** -3)
    with pytest.raises(InvalidArgument):
        envelope(AuxiliarySpec("case3"), 4.0, 3)


def test_ml_case1_weights_within_envelope(ml_params, ml_x0):
    target = ml.ml_characteristics(ml_params, 0.1)
    spec = ml.case1_spec(ml_params)
    for tr in traces(5, 10.0, 5.0, 30):
        s = weighted_sample(target, spec, tr, 0.1, ml_x0)
        assert 0 < s.weight <= envelope(spec, 10.0, len(tr)) and math.isfinite(s.weight)


def test_same_flow_change_is_identity(ml_params, ml_x0):
    target = ml.ml_characteristics(ml_params, 0.1)
    for tr in traces(6, 10.0, 5.0, 10):
        sk = simulate_path(target, tr, ml_x0)
        term, w = weight_flow_change(sk, tr, target, target.flow)
        assert w == 1.0
        assert term == evaluate_state(sk, target, 5.0) == sk.terminal


def test_flow_change_blind_characteristics():
    params = tg.TelegraphParams(kappa=1.0)
    target = tg.telegraph_characteristics(params, rate_bound=5.0)
    alt = euler_polygon(target.flow.vector_field, 0.5)
    for tr in traces(7, 5.0, 4.0, 20):
        sk = simulate_path(target, tr, (0, 2.0))
        term, w = weight_flow_change(sk, tr, target, alt)
        assert w == 1.0
        assert term.theta == sk.terminal.theta and term.nu != sk.terminal.nu


@pytest.mark.parametrize("kind", ["case1", "case2", "case3"])
def test_equal_steps_give_identical_legs(kind, ml_params, ml_x0):
    target = ml.ml_characteristics(ml_params, 0.1)
    spec = {"case1": ml.case1_spec(ml_params), "case2": ml.case2_spec(ml_params, horizon=3.0),
            "case3": AuxiliarySpec("case3")}[kind]
    for tr in traces(8, 10.0, 3.0, 5):
        f, c = coupled_weighted_pair(target, spec, tr, 0.1, 0.1, ml_x0)
        assert (f.value, f.weight, f.terminal) == (c.value, c.weight, c.terminal)


@pytest.mark.parametrize("kind", ["case1", "case2", "case3"])
def test_legs_share_skeleton(kind, ml_params, ml_x0):
    target = ml.ml_characteristics(ml_params, 0.1)
    spec = {"case1": ml.case1_spec(ml_params), "case2": ml.case2_spec(ml_params, horizon=3.0),
            "case3": AuxiliarySpec("case3")}[kind]
    for tr in traces(9, 10.0, 3.0, 5):
        f, c = coupled_weighted_pair(target, spec, tr, 0.05, 0.2, ml_x0)
        assert f.skeleton is c.skeleton
        assert f.terminal.theta == c.terminal.theta
        assert f.weight > 0 and c.weight > 0
