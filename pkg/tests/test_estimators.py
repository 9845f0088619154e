import math

import numpy as np
import pytest

from es_verify.domain import (
    EstimationError,
    OracleUnavailableError,
    ParameterError,
    SigmaGrid,
    SigmaRangeStatus,
    SuccessMode,
)
from es_verify.services.estimators import (
    SuboptimalityOracle,
    estimate_cumulative_success,
    estimate_eta,
    estimate_success_curve,
    estimate_success_exponent,
    estimate_success_prob,
    estimate_suboptimality,
    estimate_xi,
    rejection_horizon,
    suboptimality_oracle,
    wilson_interval,
)
from es_verify.services.objectives import make_objective


def test_wilson_interval():
    low, high = wilson_interval(50, 100)
    assert low == pytest.approx(0.4038, abs=1e-4)
    assert high == pytest.approx(0.5962, abs=1e-4)
    assert wilson_interval(0, 100)[0] == 0.0
    assert 0.0 < wilson_interval(0, 100)[1] < 0.05
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_saddle_success_is_one_half(seed):
    saddle = make_objective("quadratic_saddle:a=1")
    result = estimate_success_prob([0.0, 0.0], 0.7, saddle, n=40000, seed=seed)
    assert abs(result.estimate - 0.5) <= 3.0 * result.standard_error
    assert result.ci_low < 0.5 < result.ci_high
    assert result.n_samples == 40000
    assert result.kind == "success_strict"


def test_common_random_numbers(sphere2, seed):
    sigmas = [0.1, 0.5, 2.0]
    first = estimate_success_curve([1.0, 0.0], sigmas, sphere2, n=5000, seed=seed)
    second = estimate_success_curve([1.0, 0.0], sigmas, sphere2, n=5000, seed=seed)
    assert [r.successes for r in first] == [r.successes for r in second]
    single = estimate_success_prob([1.0, 0.0], 0.5, sphere2, n=5000, seed=seed)
    assert single.successes == first[1].successes
    # one draw matrix for all sigmas: the sphere curve is monotone
    assert first[0].successes >= first[1].successes >= first[2].successes


def test_too_few_samples(sphere2):
    with pytest.raises(ParameterError):
        estimate_success_prob([1.0, 0.0], 0.5, sphere2, n=50)
    with pytest.raises(ParameterError):
        estimate_success_prob([1.0, 0.0], 0.0, sphere2, n=1000)
    with pytest.raises(ParameterError):
        estimate_suboptimality([1.0, 0.0], sphere2, n=500)


def test_suboptimality_matches_ball_volume(sphere2, seed):
    result = estimate_suboptimality([1.0, 0.0], sphere2, n=100000, seed=seed)
    assert abs(result.estimate - math.pi) <= 2.5 * result.ci_halfwidth
    assert result.warnings == ()


def test_suboptimality_warns_at_box_boundary(sphere2, seed):
    result = estimate_suboptimality([1.99, 0.0], sphere2, n=20000, seed=seed)
    assert result.warnings
    assert "boundary" in result.warnings[0]


def test_monte_carlo_oracle(sphere2, seed):
    oracle = SuboptimalityOracle(sphere2, n_reference=200000, seed=seed)
    assert oracle.resolution == pytest.approx(16.0 / 200000)
    values = oracle(np.array([[1.0, 0.0], [0.5, 0.0]]))
    assert values[0] == pytest.approx(math.pi, abs=0.05)
    assert values[1] == pytest.approx(math.pi / 4.0, abs=0.05)


def test_oracle_selection(sphere2):
    assert suboptimality_oracle(sphere2) == sphere2.suboptimality
    rosenbrock = make_objective("rosenbrock2d")
    assert isinstance(suboptimality_oracle(rosenbrock, n_reference=2000), SuboptimalityOracle)
    with pytest.raises(OracleUnavailableError):
        suboptimality_oracle(rosenbrock, allow_monte_carlo=False)


def test_xi_and_eta_bracket_the_sphere_target_rate(sphere2, seed):
    xi = estimate_xi([1.0, 0.0], 0.2, sphere2, seed=seed)
    eta = estimate_eta([1.0, 0.0], 0.2, sphere2, seed=seed)
    assert xi.xi_status == SigmaRangeStatus.OK
    assert eta.eta_status == SigmaRangeStatus.OK
    assert 0.05 < eta.eta_hat < xi.xi_hat < 5.0
    assert xi.xi_bracket[0] <= xi.xi_hat
    assert eta.eta_bracket[1] >= eta.eta_hat


def test_xi_empty_set_and_eta_at_ceiling_on_saddle(seed):
    saddle = make_objective("quadratic_saddle:a=1")
    assert estimate_xi([0.0, 0.0], 0.2, saddle, seed=seed).xi_status == SigmaRangeStatus.EMPTY_SET
    assert estimate_xi([0.0, 0.0], 0.2, saddle, seed=seed).xi_hat == math.inf
    eta = estimate_eta([0.0, 0.0], 0.2, saddle, seed=seed)
    assert eta.eta_status == SigmaRangeStatus.AT_GRID_CEILING
    assert eta.eta_hat == math.inf


def test_saddle_rate_equal_to_p_is_inconclusive(seed):
    saddle = make_objective("quadratic_saddle:a=1")
    xi = estimate_xi([0.0, 0.0], 0.5, saddle, grid=SigmaGrid(1e-3, 1.0, 32), seed=seed,
                     confidence=0.999)
    assert xi.xi_status == SigmaRangeStatus.INCONCLUSIVE
    assert xi.xi_hat is None


def test_isolated_optimum_thresholds(spike, seed):
    xi = estimate_xi([0.0, 0.0], 0.2, spike, seed=seed)
    assert xi.xi_status == SigmaRangeStatus.AT_GRID_FLOOR
    assert xi.xi_hat == 0.0
    eta = estimate_eta([0.0, 0.0], 0.2, spike, seed=seed)
    assert eta.eta_status == SigmaRangeStatus.EMPTY_SET
    assert eta.eta_hat == 0.0


def test_bad_p(sphere2):
    with pytest.raises(ParameterError):
        estimate_xi([1.0, 0.0], 1.0, sphere2)
    with pytest.raises(ParameterError):
        estimate_eta([1.0, 0.0], 0.0, sphere2)


@pytest.mark.slow
def test_cubic_saddle_exponent_is_one_half(seed):
    cubic = make_objective("cubic_saddle")
    fit = estimate_success_exponent([0.0, 0.0], cubic, 1e-6, 1e-2, points=9, budget=100000, seed=seed)
    assert fit.slope == pytest.approx(0.5, abs=0.1)
    assert fit.dropped_sigmas == ()


def test_exponent_needs_three_decades(seed):
    cubic = make_objective("cubic_saddle")
    with pytest.raises(ParameterError):
        estimate_success_exponent([0.0, 0.0], cubic, 1e-3, 1e-1)


def test_exponent_without_successes_fails(spike, seed):
    with pytest.raises(EstimationError):
        estimate_success_exponent([0.0, 0.0], spike, 1e-4, 1.0, points=5, budget=1000, seed=seed)


def test_rejection_horizon():
    assert rejection_horizon(1.0, -0.05, 1e-100) == 4606
    assert rejection_horizon(1e-120, -0.05, 1e-100) == 1


def test_cumulative_success_on_sphere(sphere2, seed):
    result = estimate_cumulative_success([1.0, 0.0], sphere2, 1.0, -0.05, horizon=50, n=2000, seed=seed)
    assert result.horizon == 50
    assert len(result.per_step) == 50
    assert result.total > 5.0
    assert result.never_success < 1e-3
    assert result.per_step[-1] >= result.per_step[0]


def test_cumulative_success_on_isolated_optimum(spike, seed):
    result = estimate_cumulative_success([0.0, 0.0], spike, 1.0, -0.05, horizon=20, n=1000, seed=seed)
    assert result.total == 0.0
    assert result.never_success == 1.0


def test_weak_mode_counts_ties(spike, seed):
    strict = estimate_success_prob([1.0, 1.0], 0.1, spike, n=1000, seed=seed)
    weak = estimate_success_prob([1.0, 1.0], 0.1, spike, n=1000, seed=seed, mode=SuccessMode.WEAK)
    assert strict.estimate == 0.0
    assert weak.estimate == 1.0
