import math

import pytest

from es_verify.config.settings import CheckSettings
from es_verify.domain import ParameterError, SigmaGrid, UsageError
from es_verify.services.objectives import make_objective
from es_verify.services.theory_checks import (
    CHECK_IDS,
    build_check_suite,
    case_study_rate,
    check_case_study_rate,
    check_expected_decrease,
    check_gap,
    check_quantile_bound,
    check_regular_limit,
    check_sigma_upper_bound,
    check_step_scaling,
    check_theorem1_plateau,
    gaussian_density_sup,
    run_check,
    run_check_job,
    sigma_upper_bound,
)

SMALL_GRID = SigmaGrid(1e-3, 10.0, 32)


def test_density_sup():
    assert gaussian_density_sup(1.0, 2) == pytest.approx(1.0 / (2.0 * math.pi))


@pytest.mark.parametrize("sigma", [0.05, 0.3, 1.0])
def test_sphere_expected_decrease_holds(sphere2, seed, sigma):
    report = check_expected_decrease([1.0, 0.0], sigma, sphere2, n=20000, seed=seed)
    assert report.passed
    assert report.details["oracle"] == "analytic"
    assert report.tolerance == 0.0
    assert report.empirical["mean_decrease"] > report.bound["at_p_hat"]


def test_sphere_quantile_bound_holds(sphere2, seed):
    report = check_quantile_bound([1.0, 0.0], 0.3, sphere2, n=20000, seed=seed)
    assert report.passed
    assert len(report.details["grid"]) == 3


def test_rosenbrock_decrease_uses_monte_carlo_oracle(seed):
    rosenbrock = make_objective("rosenbrock2d")
    report = check_expected_decrease([0.0, 0.0], 0.3, rosenbrock, n=5000, seed=seed, n_reference=50000)
    assert report.details["oracle"] == "monte_carlo"
    assert report.tolerance == pytest.approx(rosenbrock.bounding_box.volume / 50000)
    assert report.passed


def test_plateau_objective_is_routed_to_plateau_check(seed):
    stepped = make_objective("stepped_sphere:k=4,d=2")
    with pytest.raises(ParameterError):
        check_expected_decrease([1.0, 0.0], 0.5, stepped, n=1000, seed=seed)


def test_plateau_bounds_hold(seed):
    stepped = make_objective("stepped_sphere:k=4,d=2")
    report, stats = check_theorem1_plateau([1.0, 0.0], 0.5, stepped, n=20000, seed=seed)
    assert report.passed
    assert report.details["slack_less"] >= 0.0
    assert report.details["slack_leq"] >= 0.0
    assert "literal_leq_bound" in report.details
    assert stats.levels
    assert stats.zeta >= stats.zeta_below > 0.0
    assert stats.level_mass == pytest.approx(stepped.level_mass(4.0))


def test_plateau_check_needs_level_geometry(sphere2, seed):
    with pytest.raises(ParameterError):
        check_theorem1_plateau([1.0, 0.0], 0.5, sphere2, n=1000, seed=seed)


class _LevelView:
    """Forwards to a stepped sphere but hides the attributes named in ``hidden``."""

    def __init__(self, inner, hidden=("k",)):
        self._inner = inner
        self._hidden = hidden

    def __getattr__(self, name):
        if name in self._hidden:
            raise AttributeError(name)
        return getattr(self._inner, name)


def test_plateau_check_uses_level_protocol_only(seed):
    stepped = make_objective("stepped_sphere:k=4,d=2")
    direct, direct_stats = check_theorem1_plateau([1.0, 0.0], 0.5, stepped, n=5000, seed=seed)
    viewed, viewed_stats = check_theorem1_plateau([1.0, 0.0], 0.5, _LevelView(stepped), n=5000, seed=seed)
    assert viewed.passed == direct.passed
    assert viewed_stats.levels == direct_stats.levels
    assert all(level * 4.0 == round(level * 4.0) for level in viewed_stats.levels)

    with pytest.raises(ParameterError):
        check_theorem1_plateau([1.0, 0.0], 0.5, _LevelView(stepped, ("level_value",)), n=1000, seed=seed)


def test_step_scaling_with_unit_factor_has_zero_slack(sphere2, seed):
    report = check_step_scaling([1.0, 0.0], 0.3, 1.0, sphere2, n=5000, seed=seed)
    assert report.slack == 0.0
    assert report.passed


def test_step_scaling_on_saddle(seed):
    saddle = make_objective("quadratic_saddle:a=1")
    report = check_step_scaling([0.0, 0.0], 0.01, 4.0, saddle, n=20000, seed=seed)
    assert report.passed
    # scale-invariant success set: both estimates come from the same draws
    assert report.empirical["p_sigma"] == report.empirical["p_a_sigma"]


def test_step_scaling_rejects_shrinking_factor(sphere2):
    with pytest.raises(ParameterError):
        check_step_scaling([1.0, 0.0], 0.3, 0.5, sphere2)


def test_sigma_upper_bound_closed_form():
    assert sigma_upper_bound(math.pi, 0.5, 2) == pytest.approx(1.0)


def test_sigma_upper_bound_on_sphere(sphere2, seed):
    report = check_sigma_upper_bound([1.0, 0.0], 0.5, sphere2, n=20000, seed=seed)
    assert report.bound["sigma"] == pytest.approx(1.0)
    assert report.passed
    assert report.empirical["p_hat"] < 0.5


def test_sigma_upper_bound_with_empty_success_domain(spike, seed):
    report = check_sigma_upper_bound([0.0, 0.0], 0.3, spike, n=1000, seed=seed, volume_samples=5000)
    assert report.details["empty_success_domain"]
    assert report.bound["sigma"] == 1.0
    assert report.empirical["p_hat"] == 0.0
    assert report.passed


def test_gap_holds_on_sphere(sphere2, seed):
    report = check_gap([1.0, 0.0], 0.4, 0.1, sphere2, grid=SMALL_GRID, per_point_budget=2000, seed=seed)
    assert report.passed
    assert report.empirical["xi_status"] == "ok"
    assert report.empirical["eta_status"] == "ok"


def test_gap_inconclusive_scan_fails(seed):
    saddle = make_objective("quadratic_saddle:a=1")
    report = check_gap([0.0, 0.0], 0.5, 0.1, saddle, grid=SMALL_GRID, per_point_budget=2000, seed=seed,
                       confidence=0.999)
    assert not report.passed
    assert report.details["inconclusive"]
    assert math.isnan(report.slack)


def test_gap_needs_ordered_rates(sphere2):
    with pytest.raises(ParameterError):
        check_gap([1.0, 0.0], 0.1, 0.4, sphere2)


def test_regular_point_tends_to_one_half(sphere2, seed):
    report = check_regular_limit([1.0, 0.0], sphere2, n=20000, seed=seed)
    assert report.bound["limit"] == 0.5
    assert report.details["trend_ok"]
    assert report.passed


def test_saddle_limit_comes_from_rate_table(seed):
    saddle = make_objective("quadratic_saddle:a=9")
    report = check_regular_limit([0.0, 0.0], saddle, n=20000, seed=seed)
    assert report.bound["limit"] == pytest.approx(0.2048, abs=1e-4)
    assert report.details["gradient_norm"] == 0.0
    assert report.passed


def test_critical_point_without_rate_needs_a_limit(spike, seed):
    with pytest.raises(ParameterError):
        check_regular_limit([0.0, 0.0], spike, n=1000, seed=seed)
    report = check_regular_limit([0.0, 0.0], spike, n=1000, seed=seed, limit=0.0)
    assert report.passed


def test_case_study_rates():
    assert case_study_rate("linear_ridge", 1.0) == pytest.approx(0.25)
    assert case_study_rate("quadratic_saddle", 1.0) == pytest.approx(0.5)
    assert case_study_rate("jump_corner", 1.0) == pytest.approx(0.125)
    with pytest.raises(UsageError):
        case_study_rate("valley", 1.0)
    with pytest.raises(ParameterError):
        case_study_rate("linear_ridge", 0.0)


@pytest.mark.parametrize("kind, a", [("quadratic_saddle", 9.0), ("linear_ridge", 4.0)])
def test_two_sided_case_study(kind, a, seed):
    report = check_case_study_rate(kind, a, n=200000, seed=seed)
    assert report.details["comparison"] == "two_sided"
    assert report.passed


def test_jump_corner_is_a_lower_bound(seed):
    report = check_case_study_rate("jump_corner", 1.0, n=200000, seed=seed)
    assert report.details["comparison"] == "lower_bound"
    assert report.parameters["sigma"] == 1e-5
    assert report.passed


def test_run_check_dispatch(sphere2, seed):
    report = run_check("step_scaling", sphere2, {"m": [1.0, 0.0], "sigma": 0.3, "a": 2.0, "n": 5000}, seed)
    assert report.check_id == "step_scaling"
    assert report.n_samples == 5000
    with pytest.raises(UsageError):
        run_check("no_such_check", sphere2, {}, seed)
    with pytest.raises(UsageError):
        run_check("gap", None, {"m": [1.0, 0.0]}, seed)
    with pytest.raises(UsageError):
        run_check("step_scaling", sphere2, {"m": [1.0, 0.0], "sigma": 0.3}, seed)


def test_check_ids_are_complete():
    assert len(CHECK_IDS) == 8
    assert "theorem1_plateau" in CHECK_IDS


def test_default_check_suite(app_config):
    jobs = build_check_suite(app_config.checks)
    # 4 sphere probes x 5 jobs, 3 rosenbrock x 5, 2 stepped x 4, then the extra jobs
    assert len(jobs) == 20 + 15 + 8 + len(app_config.checks.suite)
    stepped = {job["check"] for job in jobs if job.get("objective") == "stepped_sphere:k=4,d=2"}
    assert stepped == {"theorem1_plateau", "step_scaling"}
    assert jobs[0] == {"check": "expected_decrease", "objective": "sphere:d=2",
                       "params": {"m": [1.0, 0.0], "sigma": 0.05}}


def test_suite_jobs_are_copies():
    checks = CheckSettings(probes={}, suite=[{"check": "gap", "objective": "sphere:d=2", "params": {"m": [1.0, 0.0]}}])
    jobs = build_check_suite(checks)
    jobs[0]["params"]["m"][0] = 5.0
    assert checks.suite[0]["params"]["m"] == [1.0, 0.0]


def test_check_job_matches_direct_call(sphere2, seed):
    params = {"m": [1.0, 0.0], "sigma": 0.3, "a": 2.0, "n": 4000}
    job = {"check": "step_scaling", "objective": "sphere:d=2", "params": params, "seed": seed}
    assert run_check_job(job) == run_check("step_scaling", sphere2, params, seed)
