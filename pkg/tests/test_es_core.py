import math

import numpy as np
import pytest

from es_verify.domain import (
    EsParams,
    EsState,
    ObjectiveEvaluationError,
    OutcomeLabel,
    ParameterError,
    StoppingRule,
    StopReason,
)
from es_verify.services.es_core import accept_or_reject, es_run, es_step
from es_verify.services.objectives import make_objective, transformed
from es_verify.utils.rng import make_rng


def test_one_fifth_rule_targets_a_fifth():
    params = EsParams.one_fifth()
    assert params.tau == pytest.approx(0.2, abs=1e-15)
    assert EsParams.with_tau(0.01).tau == pytest.approx(0.01)
    assert EsParams.dimension_scaled(4).c_plus == pytest.approx(0.5)


@pytest.mark.parametrize("c_plus, c_minus", [(0.0, -0.1), (0.5, 0.1), (0.1, -0.2), (0.2, -0.2)])
def test_invalid_step_size_constants_are_rejected(c_plus, c_minus):
    with pytest.raises(ParameterError):
        EsParams(c_plus, c_minus)


def test_acceptance_multiplies_sigma_by_exp_c_plus(params):
    state = EsState.initial([1.0, 0.0], 1.0, f=1.0)
    x = np.array([0.5, 0.0])
    new_state, record = accept_or_reject(state, x, 0.25, params)
    assert record.accepted
    np.testing.assert_array_equal(new_state.m, x)
    assert new_state.log_sigma == pytest.approx(params.c_plus)
    assert new_state.f == 0.25
    assert new_state.t == 1


def test_rejection_keeps_parent_and_shrinks_sigma(params):
    state = EsState.initial([1.0, 0.0], 1.0, f=1.0)
    new_state, record = accept_or_reject(state, np.array([2.0, 0.0]), 4.0, params)
    assert not record.accepted
    np.testing.assert_array_equal(new_state.m, state.m)
    assert new_state.log_sigma == pytest.approx(params.c_minus)
    assert new_state.f == 1.0


def test_ties_are_accepted(params):
    state = EsState.initial([1.0, 0.0], 1.0, f=1.0)
    new_state, record = accept_or_reject(state, np.array([0.0, 1.0]), 1.0, params)
    assert record.accepted
    np.testing.assert_array_equal(new_state.m, [0.0, 1.0])


def test_step_rejects_dimension_mismatch(params, sphere2, seed):
    state = EsState.initial([1.0, 0.0, 0.0], 1.0)
    with pytest.raises(ParameterError):
        es_step(state, sphere2, make_rng(seed), params)


def test_run_is_reproducible(params, sphere2, seed):
    stopping = StoppingRule(max_iterations=300)
    first = es_run(params, sphere2, ([1.0, 0.0], 0.3), stopping, seed)
    second = es_run(params, sphere2, ([1.0, 0.0], 0.3), stopping, seed)
    np.testing.assert_array_equal(first.final_state.m, second.final_state.m)
    assert first.final_state.log_sigma == second.final_state.log_sigma
    assert [r.accepted for r in first.records] == [r.accepted for r in second.records]


def test_parent_value_never_increases(params, seed):
    rosenbrock = make_objective("rosenbrock2d")
    trace = es_run(params, rosenbrock, ([-2.0, 2.0], 1.0), StoppingRule(max_iterations=2000), seed)
    values = trace.f_parent_sequence()
    assert all(later <= earlier for earlier, later in zip(values, values[1:]))
    assert trace.final_state.f <= values[-1]


def test_rank_invariance_under_increasing_transformation(params, sphere2, seed):
    stopping = StoppingRule(max_iterations=500)
    plain = es_run(params, sphere2, ([1.0, 0.0], 0.3), stopping, seed)
    composed = es_run(params, transformed(sphere2), ([1.0, 0.0], 0.3), stopping, seed)
    assert len(plain.records) == len(composed.records)
    for a, b in zip(plain.records, composed.records):
        np.testing.assert_array_equal(a.m_before, b.m_before)
        assert a.log_sigma_before == b.log_sigma_before


def test_sphere_reaches_target(params, sphere2, seed):
    stopping = StoppingRule(max_iterations=10000, f_target=1e-10)
    trace = es_run(params, sphere2, ([1.0, 0.0], 0.3), stopping, seed)
    assert trace.stop_reason == StopReason.TARGET_REACHED
    assert trace.outcome == OutcomeLabel.CONVERGED_TO_OPTIMUM
    assert trace.final_state.f <= 1e-10


def test_budget_starvation(params, sphere2, seed):
    stopping = StoppingRule(max_iterations=10, f_target=1e-300)
    trace = es_run(params, sphere2, ([1.0, 0.0], 0.3), stopping, seed)
    assert trace.stop_reason == StopReason.BUDGET
    assert trace.outcome == OutcomeLabel.BUDGET_EXHAUSTED
    assert trace.final_state.t == 10
    assert len(trace.records) == 10


def test_record_stride_thins_records(params, sphere2, seed):
    trace = es_run(params, sphere2, ([1.0, 0.0], 0.3), StoppingRule(max_iterations=100), seed, record_stride=10)
    assert [r.t for r in trace.records] == list(range(0, 100, 10))


def test_pure_rejection_ladder_stalls(params, spike, seed):
    stopping = StoppingRule(max_iterations=5000, sigma_floor=1e-100, stall_window=1000)
    trace = es_run(params, spike, ([0.0, 0.0], 1.0), stopping, seed)
    assert trace.accepted_count == 0
    assert trace.stop_reason == StopReason.STALLED
    assert trace.outcome == OutcomeLabel.STALLED
    # below the floor after about 1329 rejections, then a full window
    assert 2300 <= trace.final_state.t <= 2400
    assert trace.final_state.log_sigma == pytest.approx(trace.final_state.t * params.c_minus)
    assert math.isfinite(trace.final_state.log_sigma)


def test_stall_window_counts_accepted_iterations(params, sphere2, seed):
    # offspring round to the parent at this scale, so every step is an accepted tie
    stopping = StoppingRule(max_iterations=1000, sigma_floor=1e-100, stall_window=50)
    trace = es_run(params, sphere2, ([1.0, 0.0], 1e-120), stopping, seed)
    assert trace.outcome == OutcomeLabel.STALLED
    assert trace.final_state.t == 50
    assert trace.accepted_count == 50


def test_ridge_with_fast_rate_diverges(params, seed):
    ridge = make_objective("linear_ridge:a=0.5")
    stopping = StoppingRule(max_iterations=10000, divergence_level=100.0)
    trace = es_run(params, ridge, ([0.0, 1.0], 0.1), stopping, seed)
    assert trace.outcome == OutcomeLabel.DIVERGED
    assert trace.final_state.f <= -100.0


def test_divergence_radius_trips(params, seed):
    ridge = make_objective("linear_ridge:a=0.5")
    stopping = StoppingRule(max_iterations=10000, divergence_radius=50.0)
    trace = es_run(params, ridge, ([0.0, 1.0], 0.1), stopping, seed)
    assert trace.stop_reason == StopReason.DIVERGED
    assert np.linalg.norm(trace.final_state.m) >= 50.0


def test_without_divergence_criterion_never_labelled_diverged(params, seed):
    ridge = make_objective("linear_ridge:a=0.5")
    trace = es_run(params, ridge, ([0.0, 1.0], 0.1), StoppingRule(max_iterations=200), seed)
    assert trace.outcome == OutcomeLabel.BUDGET_EXHAUSTED


def test_non_finite_value_aborts_run(params, broken, seed):
    with pytest.raises(ObjectiveEvaluationError) as info:
        es_run(params, broken, ([0.0], 1.0), StoppingRule(max_iterations=10), seed)
    assert info.value.iteration == 0
    assert info.value.point == [0.0]
