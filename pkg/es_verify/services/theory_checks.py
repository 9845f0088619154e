# services/theory_checks.py

"""
Empirical checks of the progress bounds and step-size lemmas.

Every check returns a BoundCheckReport whose slack is oriented so that
``slack >= -tolerance`` means the bound holds. Plug-in probabilities enter
bounds at the conservative end of their Wilson interval.

Sub-estimates draw from derived streams: key 0 for offspring samples,
key 1 for a Monte Carlo suboptimality reference cloud.
"""

import copy
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from es_verify.config.settings import CheckSettings, EstimatorSettings
from es_verify.domain import (
    BoundCheckReport,
    IObjective,
    ParameterError,
    PlateauStats,
    SigmaGrid,
    SigmaRangeStatus,
    SuccessMode,
    UsageError,
)
from es_verify.services.estimators import (
    SuboptimalityOracle,
    estimate_eta,
    estimate_success_curve,
    estimate_success_prob,
    estimate_suboptimality,
    estimate_xi,
    suboptimality_oracle,
    wilson_interval,
    z_value,
)
from es_verify.services.objectives import (
    JUMP_CORNER_OFFSET,
    LinearRidge,
    QuadraticSaddle,
    SphereJump,
    jump_corner_rate,
    linear_ridge_rate,
    make_objective,
    quadratic_saddle_rate,
)
from es_verify.utils.rng import DEFAULT_SEED, derive_seed, make_rng

logger = logging.getLogger(__name__)

OFFSPRING_KEY = 0
ORACLE_KEY = 1

# attributes an objective needs for the plateau form of the decrease bounds
PLATEAU_PROTOCOL = ("level_index", "level_value", "level_mass")


def gaussian_density_sup(sigma: float, d: int) -> float:
    """u = (2 pi)^(-d/2) sigma^(-d), the peak density of N(m, sigma^2 I)."""
    return math.exp(-0.5 * d * math.log(2.0 * math.pi) - d * math.log(sigma))


def _point(m) -> np.ndarray:
    return np.asarray(m, dtype=float).reshape(-1)


def _require_sigma(sigma: float) -> None:
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ParameterError(f"sigma must be positive and finite, got {sigma}")


def _offspring(m: np.ndarray, sigma: float, n: int, seed: int) -> np.ndarray:
    rng = make_rng(derive_seed(seed, OFFSPRING_KEY))
    return m + sigma * rng.standard_normal((n, m.shape[0]))


def _oracle_for(objective: IObjective, oracle, n_reference: int, seed: int):
    if oracle is not None:
        return oracle
    return suboptimality_oracle(objective, True, n_reference, derive_seed(seed, ORACLE_KEY))


def _oracle_tolerance(oracle) -> float:
    # a Monte Carlo oracle cannot resolve decreases below one reference cell
    return oracle.resolution if isinstance(oracle, SuboptimalityOracle) else 0.0


def _decrease_sample(m: np.ndarray, sigma: float, objective: IObjective, n: int, seed: int, oracle
                     ) -> Tuple[np.ndarray, float, int]:
    if not objective.level_sets_null:
        raise ParameterError(
            f"{objective.id} has level sets of positive measure; use the theorem1_plateau check"
        )
    x = _offspring(m, sigma, n, seed)
    f_m = float(objective.evaluate_batch(m.reshape(1, -1))[0])
    successes = int(np.count_nonzero(objective.evaluate_batch(x) < f_m))
    fhat_m = float(oracle(m.reshape(1, -1), SuccessMode.STRICT)[0])
    decrease = np.maximum(0.0, fhat_m - oracle(x, SuccessMode.STRICT))
    return decrease, fhat_m, successes


def check_expected_decrease(m, sigma: float, objective: IObjective, n: int = 100000,
                            seed: int = DEFAULT_SEED, confidence: float = 0.95, oracle=None,
                            n_reference: int = 200000) -> BoundCheckReport:
    """
    E[max(0, f-hat(m) - f-hat(x))] >= (2 pi)^(d/2) sigma^d p^2 / 2 for the
    strict success probability p, from one shared offspring sample.
    """
    m = _point(m)
    _require_sigma(sigma)
    d = m.shape[0]
    oracle = _oracle_for(objective, oracle, n_reference, seed)
    decrease, fhat_m, successes = _decrease_sample(m, sigma, objective, n, seed, oracle)

    p_hat = successes / n
    p_low, p_high = wilson_interval(successes, n, confidence)
    mean = float(np.mean(decrease))
    se = float(np.std(decrease, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    mean_low = mean - z_value(confidence) * se
    scale = 1.0 / (2.0 * gaussian_density_sup(sigma, d))
    bound_low = scale * p_low ** 2

    return BoundCheckReport.from_slack(
        check_id="expected_decrease",
        parameters={"objective": objective.id, "m": m.tolist(), "sigma": sigma, "n": n},
        empirical={"mean_decrease": mean, "mean_decrease_low": mean_low, "se": se,
                   "p_hat": p_hat, "p_low": p_low, "p_high": p_high, "f_hat_m": fhat_m},
        bound={"at_p_hat": scale * p_hat ** 2, "at_p_low": bound_low},
        slack=mean_low - bound_low,
        tolerance=_oracle_tolerance(oracle),
        n_samples=n,
        seed=seed,
        details={"oracle": "analytic" if objective.has_analytic_suboptimality else "monte_carlo"},
    )


def check_quantile_bound(m, sigma: float, objective: IObjective, n: int = 100000,
                         q_fractions: Sequence[float] = (0.1, 0.5, 0.9), seed: int = DEFAULT_SEED,
                         se_multiplier: float = 3.0, oracle=None, n_reference: int = 200000
                         ) -> BoundCheckReport:
    """
    For q = fraction * p-hat: Pr(decrease >= (2 pi)^(d/2) sigma^d (p - q)) >= q.
    The report carries the grid point closest to failing.
    """
    m = _point(m)
    _require_sigma(sigma)
    d = m.shape[0]
    if any(not 0.0 <= f <= 1.0 for f in q_fractions):
        raise ParameterError(f"q fractions must lie in [0, 1], got {list(q_fractions)}")
    oracle = _oracle_for(objective, oracle, n_reference, seed)
    decrease, fhat_m, successes = _decrease_sample(m, sigma, objective, n, seed, oracle)
    p_hat = successes / n
    inv_u = 1.0 / gaussian_density_sup(sigma, d)

    rows = []
    for fraction in q_fractions:
        q = fraction * p_hat
        threshold = inv_u * (p_hat - q)
        frequency = float(np.mean(decrease >= threshold))
        se = math.sqrt(max(frequency * (1.0 - frequency), 0.0) / n)
        rows.append({"q": q, "threshold": threshold, "frequency": frequency,
                     "slack": frequency - q, "tolerance": se_multiplier * se})
    worst = min(rows, key=lambda r: r["slack"] + r["tolerance"])

    return BoundCheckReport.from_slack(
        check_id="quantile_bound",
        parameters={"objective": objective.id, "m": m.tolist(), "sigma": sigma, "n": n,
                    "q_fractions": list(q_fractions)},
        empirical={"p_hat": p_hat, "frequencies": [r["frequency"] for r in rows]},
        bound={"q": [r["q"] for r in rows], "thresholds": [r["threshold"] for r in rows]},
        slack=worst["slack"],
        tolerance=worst["tolerance"],
        n_samples=n,
        seed=seed,
        details={"grid": rows, "f_hat_m": fhat_m},
    )


def check_theorem1_plateau(m, sigma: float, objective: IObjective, n: int = 100000,
                           seed: int = DEFAULT_SEED, confidence: float = 0.95,
                           min_hits: int = 30) -> Tuple[BoundCheckReport, PlateauStats]:
    """
    Decrease bounds with plateaus, on an objective exposing its level
    geometry: ``level_index`` (plateau number of each point), ``level_value``
    (f on a plateau) and ``level_mass`` (plateau volume).

    With zeta_< the sum of squared plateau masses strictly below f(m):
      E[decrease of f-hat<] >= (p^2 + zeta_<) / (2u)
      E[decrease of f-hat<=] >= (p^2 - zeta_<) / (2u) + p * vol(L_f(m))
    where p is the strict success probability.
    """
    if not all(hasattr(objective, attr) for attr in PLATEAU_PROTOCOL):
        raise ParameterError(f"{objective.id} does not expose its plateau geometry")
    m = _point(m)
    _require_sigma(sigma)
    d = m.shape[0]
    x = _offspring(m, sigma, n, seed)
    j_x = objective.level_index(x)
    j_m = float(objective.level_index(m.reshape(1, -1))[0])

    levels, counts = np.unique(j_x[j_x <= j_m], return_counts=True)
    well_sampled = counts >= min_hits
    masses = counts / n
    listed = levels[well_sampled]
    r_less = [float(np.mean(j_x < j)) for j in listed]
    r_leq = [float(np.mean(j_x <= j)) for j in listed]
    jumps = masses[well_sampled]
    below = listed < j_m
    zeta = float(np.sum(jumps ** 2))
    zeta_below = float(np.sum(jumps[below] ** 2))
    residual = float(np.sum(masses[~well_sampled]))
    undersampled = tuple(float(v) for v in objective.level_value(levels[~well_sampled]))
    if undersampled:
        logger.warning(f"{len(undersampled)} plateau levels with fewer than {min_hits} hits merged into the residual")

    u = gaussian_density_sup(sigma, d)
    level_mass = float(objective.level_mass(j_m))
    successes = int(np.count_nonzero(j_x < j_m))
    p_hat = successes / n
    p_low, _ = wilson_interval(successes, n, confidence)

    z = z_value(confidence)
    dec_less = np.maximum(0.0, objective.suboptimality(m, SuccessMode.STRICT)[0]
                          - objective.suboptimality(x, SuccessMode.STRICT))
    dec_leq = np.maximum(0.0, objective.suboptimality(m, SuccessMode.WEAK)[0]
                         - objective.suboptimality(x, SuccessMode.WEAK))
    lows = {}
    for name, sample in (("less", dec_less), ("leq", dec_leq)):
        se = float(np.std(sample, ddof=1)) / math.sqrt(n)
        lows[name] = (float(np.mean(sample)), float(np.mean(sample)) - z * se)

    bound_less = (p_low ** 2 + zeta_below) / (2.0 * u)
    bound_leq = (p_low ** 2 - zeta_below) / (2.0 * u) + p_low * level_mass
    literal_leq = (p_hat ** 2 + zeta) / (2.0 * u) + level_mass
    slack_less = lows["less"][1] - bound_less
    slack_leq = lows["leq"][1] - bound_leq

    stats = PlateauStats(
        levels=tuple(float(v) for v in objective.level_value(listed)),
        r_less=tuple(r_less),
        r_leq=tuple(r_leq),
        zeta=zeta,
        zeta_below=zeta_below,
        level_mass=level_mass,
        density_sup=u,
        residual_mass=residual,
        undersampled_levels=undersampled,
    )
    sampled_mass = float(np.sum(objective.level_mass(levels)))
    report = BoundCheckReport.from_slack(
        check_id="theorem1_plateau",
        parameters={"objective": objective.id, "m": m.tolist(), "sigma": sigma, "n": n},
        empirical={"mean_decrease_less": lows["less"][0], "mean_decrease_less_low": lows["less"][1],
                   "mean_decrease_leq": lows["leq"][0], "mean_decrease_leq_low": lows["leq"][1],
                   "p_hat": p_hat, "p_low": p_low, "zeta": zeta, "zeta_below": zeta_below},
        bound={"less": bound_less, "leq": bound_leq},
        slack=min(slack_less, slack_leq),
        tolerance=0.0,
        n_samples=n,
        seed=seed,
        details={
            "slack_less": slack_less,
            "slack_leq": slack_leq,
            "literal_leq_bound": literal_leq,
            "literal_leq_holds": bool(lows["leq"][1] >= literal_leq),
            "level_mass": level_mass,
            "sampled_level_mass_total": sampled_mass,
            "box_volume": objective.bounding_box.volume,
            "plateau": stats,
        },
    )
    return report, stats


def check_step_scaling(m, sigma: float, a: float, objective: IObjective, n: int = 100000,
                       seed: int = DEFAULT_SEED, confidence: float = 0.95) -> BoundCheckReport:
    """p<(m, a sigma) >= a^-d p<(m, sigma) for a >= 1, with shared draws."""
    if a < 1.0:
        raise ParameterError(f"the scaling factor must be >= 1, got {a}")
    m = _point(m)
    _require_sigma(sigma)
    d = m.shape[0]
    base, scaled = estimate_success_curve(m, [sigma, a * sigma], objective, n, SuccessMode.STRICT,
                                          seed, confidence)
    factor = a ** (-d)
    return BoundCheckReport.from_slack(
        check_id="step_scaling",
        parameters={"objective": objective.id, "m": m.tolist(), "sigma": sigma, "a": a, "n": n},
        empirical={"p_sigma": base.estimate, "p_a_sigma": scaled.estimate,
                   "ci_sigma": base.ci_halfwidth, "ci_a_sigma": scaled.ci_halfwidth},
        bound={"scaled_p_sigma": factor * base.estimate},
        slack=scaled.estimate - factor * base.estimate,
        tolerance=scaled.ci_halfwidth + factor * base.ci_halfwidth,
        n_samples=n,
        seed=seed,
    )


def sigma_upper_bound(f_hat: float, p: float, d: int) -> float:
    """(f-hat / (p (2 pi)^(d/2)))^(1/d)."""
    return (f_hat / (p * (2.0 * math.pi) ** (0.5 * d))) ** (1.0 / d)


def check_sigma_upper_bound(m, p: float, objective: IObjective, n: int = 100000,
                            seed: int = DEFAULT_SEED, confidence: float = 0.95,
                            volume_samples: int = 100000) -> BoundCheckReport:
    """
    At sigma = (f-hat(m) / (p (2 pi)^(d/2)))^(1/d) the strict success
    probability is at most p. A Monte Carlo f-hat enters at its upper CI end.
    """
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"p must lie in (0, 1], got {p}")
    m = _point(m)
    d = m.shape[0]
    details: Dict[str, Any] = {}
    if objective.has_analytic_suboptimality:
        f_hat = float(objective.suboptimality(m, SuccessMode.STRICT)[0])
        details["oracle"] = "analytic"
    else:
        volume = estimate_suboptimality(m, objective, n=volume_samples, seed=derive_seed(seed, ORACLE_KEY),
                                        confidence=confidence)
        f_hat = volume.ci_high
        details.update(oracle="monte_carlo", f_hat_estimate=volume.estimate, warnings=list(volume.warnings))

    if f_hat > 0.0:
        sigma = sigma_upper_bound(f_hat, p, d)
    else:
        # nothing is strictly better than m, so every sigma satisfies the claim
        sigma = 1.0
        details["empty_success_domain"] = True
    result = estimate_success_prob(m, sigma, objective, n, SuccessMode.STRICT,
                                   derive_seed(seed, OFFSPRING_KEY), confidence)
    return BoundCheckReport.from_slack(
        check_id="sigma_upper_bound",
        parameters={"objective": objective.id, "m": m.tolist(), "p": p, "n": n},
        empirical={"p_hat": result.estimate, "ci_low": result.ci_low, "ci_high": result.ci_high},
        bound={"sigma": sigma, "f_hat": f_hat, "p": p},
        slack=p - result.estimate,
        tolerance=max(result.ci_high - result.estimate, 0.0),
        n_samples=n,
        seed=seed,
        details=details,
    )


def check_gap(m, p_t: float, p_h: float, objective: IObjective, grid: Optional[SigmaGrid] = None,
              per_point_budget: int = 4000, seed: int = DEFAULT_SEED, confidence: float = 0.95,
              bisection_steps: int = 12) -> BoundCheckReport:
    """p_H^(1/d) xi_{p_T} <= p_T^(1/d) eta_{p_H}, for p_H <= p_T."""
    if p_h > p_t:
        raise ParameterError(f"need p_H <= p_T, got p_H={p_h}, p_T={p_t}")
    m = _point(m)
    d = m.shape[0]
    xi = estimate_xi(m, p_t, objective, grid, per_point_budget, seed, confidence, bisection_steps)
    eta = estimate_eta(m, p_h, objective, grid, per_point_budget, seed, confidence, bisection_steps)

    parameters = {"objective": objective.id, "m": m.tolist(), "p_t": p_t, "p_h": p_h,
                  "per_point_budget": per_point_budget}
    empirical = {"xi_hat": xi.xi_hat, "xi_status": xi.xi_status.value, "xi_bracket": xi.xi_bracket,
                 "eta_hat": eta.eta_hat, "eta_status": eta.eta_status.value, "eta_bracket": eta.eta_bracket}
    n_samples = per_point_budget * (xi.grid.points + bisection_steps) * 2

    if SigmaRangeStatus.INCONCLUSIVE in (xi.xi_status, eta.eta_status):
        return BoundCheckReport(
            "gap", parameters, empirical, {}, float("nan"), 0.0, False, n_samples, seed,
            {"inconclusive": True},
        )

    left = p_h ** (1.0 / d) * xi.xi_hat
    right = p_t ** (1.0 / d) * eta.eta_hat
    if math.isinf(left) and math.isinf(right):
        slack, tolerance = 0.0, 0.0
    elif math.isinf(left) or math.isinf(right):
        slack, tolerance = right - left, 0.0
    else:
        left_low = p_h ** (1.0 / d) * (xi.xi_bracket[0] if xi.xi_bracket else xi.xi_hat)
        right_high = p_t ** (1.0 / d) * (eta.eta_bracket[1] if eta.eta_bracket else eta.eta_hat)
        slack = right - left
        tolerance = (left - left_low) + (right_high - right)
    return BoundCheckReport.from_slack(
        check_id="gap",
        parameters=parameters,
        empirical=empirical,
        bound={"left": left, "right": right},
        slack=slack,
        tolerance=tolerance,
        n_samples=n_samples,
        seed=seed,
    )


def _finite_difference_gradient(objective: IObjective, x: np.ndarray) -> np.ndarray:
    h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    steps = np.eye(x.shape[0]) * h
    plus = objective.evaluate_batch(x + steps)
    minus = objective.evaluate_batch(x - steps)
    return (plus - minus) / (2.0 * h)


def check_regular_limit(x, objective: IObjective, sigmas: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5),
                        n: int = 100000, seed: int = DEFAULT_SEED, allowance: float = 0.02,
                        limit: Optional[float] = None, confidence: float = 0.95) -> BoundCheckReport:
    """
    The strict success probability tends to ``limit`` as sigma shrinks:
    1/2 at a point with non-zero gradient, or the closed-form rate of a
    tabulated critical point. Deviations must shrink along the sequence up
    to CI noise, and the last one must be within ``allowance``.
    """
    x = _point(x)
    gradient = _finite_difference_gradient(objective, x)
    gradient_norm = float(np.linalg.norm(gradient))
    if limit is None:
        if gradient_norm > 1e-8:
            limit = 0.5
        else:
            tabulated = [r.rate for r in objective.rate_table if np.allclose(r.point, x)]
            if not tabulated:
                raise ParameterError(f"{x.tolist()} is not a regular point of {objective.id}; pass a limit")
            limit = tabulated[0]

    sigmas = sorted((float(s) for s in sigmas), reverse=True)
    curve = estimate_success_curve(x, sigmas, objective, n, SuccessMode.STRICT, seed, confidence)
    deviations = [abs(r.estimate - limit) for r in curve]
    trend_ok = all(
        deviations[i + 1] <= deviations[i] + curve[i].ci_halfwidth + curve[i + 1].ci_halfwidth
        for i in range(len(curve) - 1)
    )
    final = curve[-1]
    slack = allowance - deviations[-1]
    return BoundCheckReport(
        check_id="regular_limit",
        parameters={"objective": objective.id, "x": x.tolist(), "sigmas": sigmas, "n": n,
                    "limit": limit, "allowance": allowance},
        empirical={"p_hat": [r.estimate for r in curve], "ci_halfwidth": [r.ci_halfwidth for r in curve]},
        bound={"limit": limit},
        slack=slack,
        tolerance=0.0,
        passed=bool(trend_ok and slack >= 0.0),
        n_samples=n,
        seed=seed,
        details={"gradient": gradient.tolist(), "gradient_norm": gradient_norm, "trend_ok": trend_ok,
                 "final_p_hat": final.estimate},
    )


CASE_STUDY_KINDS: Dict[str, Callable[[float], float]] = {
    "quadratic_saddle": quadratic_saddle_rate,
    "linear_ridge": linear_ridge_rate,
    "jump_corner": jump_corner_rate,
}


def case_study_rate(kind: str, a: float) -> float:
    """Closed-form limiting success rate of a case-study critical point."""
    if kind not in CASE_STUDY_KINDS:
        raise UsageError(f"unknown case-study kind {kind!r}; valid: {', '.join(CASE_STUDY_KINDS)}")
    if not a > 0.0:
        raise ParameterError(f"a must be positive, got {a}")
    return CASE_STUDY_KINDS[kind](a)


def check_case_study_rate(kind: str, a: float, sigma: Optional[float] = None, n: int = 1000000,
                          seed: int = DEFAULT_SEED, allowance: float = 0.01,
                          epsilon: float = JUMP_CORNER_OFFSET, corner_sigma: float = 1e-5,
                          corner_allowance: float = 0.02) -> BoundCheckReport:
    """
    Monte Carlo success rate at the named point against the closed form.

    The saddle and ridge rates are two-sided within ``allowance``; the jump
    corner rate is a lower bound that is exact only as epsilon -> 0.
    """
    rate = case_study_rate(kind, a)
    if kind == "quadratic_saddle":
        objective, point = QuadraticSaddle(a), np.zeros(2)
    elif kind == "linear_ridge":
        objective, point = LinearRidge(a), np.zeros(2)
    else:
        objective, point = SphereJump("strip", a), np.array([a + epsilon, 1.0])
    if sigma is None:
        sigma = corner_sigma if kind == "jump_corner" else 1e-3
    result = estimate_success_prob(point, sigma, objective, n, SuccessMode.STRICT, seed)

    if kind == "jump_corner":
        slack, tolerance, sided = result.estimate - rate, corner_allowance, "lower_bound"
    else:
        slack, tolerance, sided = allowance - abs(result.estimate - rate), 0.0, "two_sided"
    return BoundCheckReport.from_slack(
        check_id="case_study_rate",
        parameters={"kind": kind, "a": a, "sigma": sigma, "n": n, "point": point.tolist(),
                    "objective": objective.id},
        empirical={"p_hat": result.estimate, "ci_low": result.ci_low, "ci_high": result.ci_high},
        bound={"rate": rate},
        slack=slack,
        tolerance=tolerance,
        n_samples=n,
        seed=seed,
        details={"comparison": sided, "deviation": result.estimate - rate},
    )


CHECK_IDS = (
    "expected_decrease",
    "quantile_bound",
    "theorem1_plateau",
    "step_scaling",
    "sigma_upper_bound",
    "gap",
    "regular_limit",
    "case_study_rate",
)


def run_check(check_id: str, objective: Optional[IObjective], params: Dict[str, Any],
              seed: int = DEFAULT_SEED, checks=None, estimators=None) -> BoundCheckReport:
    """
    Dispatch one check by id. ``params`` supplies the check's inputs;
    ``checks`` and ``estimators`` are the settings sections providing defaults.
    """
    checks = checks or CheckSettings()
    estimators = estimators or EstimatorSettings()
    if check_id not in CHECK_IDS:
        raise UsageError(f"unknown check {check_id!r}; valid checks: {', '.join(CHECK_IDS)}")
    if check_id != "case_study_rate" and objective is None:
        raise UsageError(f"check {check_id} needs an objective")

    def _param(key, default=None):
        return params.get(key, default)

    def _required(key):
        if key not in params:
            raise UsageError(f"check {check_id} needs parameter '{key}'")
        return params[key]

    n = int(_param("n", checks.samples))
    confidence = estimators.confidence
    if check_id == "expected_decrease":
        return check_expected_decrease(_required("m"), float(_required("sigma")), objective, n, seed,
                                       confidence, n_reference=estimators.oracle_reference_samples)
    if check_id == "quantile_bound":
        return check_quantile_bound(_required("m"), float(_required("sigma")), objective, n,
                                    _param("q_fractions", checks.quantile_fractions), seed,
                                    checks.quantile_se_multiplier,
                                    n_reference=estimators.oracle_reference_samples)
    if check_id == "theorem1_plateau":
        report, _ = check_theorem1_plateau(_required("m"), float(_required("sigma")), objective, n, seed,
                                           confidence, checks.plateau_min_hits)
        return report
    if check_id == "step_scaling":
        return check_step_scaling(_required("m"), float(_required("sigma")), float(_required("a")),
                                  objective, n, seed, confidence)
    if check_id == "sigma_upper_bound":
        return check_sigma_upper_bound(_required("m"), float(_required("p")), objective, n, seed, confidence,
                                       estimators.suboptimality_samples)
    if check_id == "gap":
        m = _required("m")
        grid = SigmaGrid.around(m, estimators.grid_floor_factor, estimators.grid_ceiling_factor,
                                estimators.grid_points)
        return check_gap(m, float(_required("p_t")), float(_required("p_h")), objective, grid,
                         int(_param("budget", estimators.per_point_budget)), seed, confidence,
                         estimators.bisection_steps)
    if check_id == "regular_limit":
        limit = _param("limit")
        return check_regular_limit(_required("m"), objective,
                                   _param("sigmas", checks.regular_limit_sigmas), n, seed,
                                   float(_param("allowance", checks.regular_limit_tolerance)),
                                   None if limit is None else float(limit), confidence)
    kind = str(_required("kind"))
    return check_case_study_rate(kind, float(_required("a")), _param("sigma"), int(_param("n", 1000000)), seed,
                                 checks.rate_allowance, checks.jump_corner_epsilon,
                                 checks.jump_corner_sigma, checks.jump_corner_allowance)


def build_check_suite(checks: CheckSettings) -> List[Dict[str, Any]]:
    """
    Default verification jobs: decrease bounds and step scaling at every
    configured probe, followed by the configured extra jobs.
    """
    jobs: List[Dict[str, Any]] = []
    for spec, probes in checks.probes.items():
        level_sets_null = make_objective(spec).level_sets_null
        decrease_ids = ("expected_decrease", "quantile_bound") if level_sets_null else ("theorem1_plateau",)
        for probe in probes:
            for check_id in decrease_ids:
                jobs.append({"check": check_id, "objective": spec, "params": dict(probe)})
            for a in checks.scaling_factors:
                jobs.append({"check": "step_scaling", "objective": spec, "params": dict(probe, a=a)})
    jobs.extend(copy.deepcopy(job) for job in checks.suite)
    return jobs


def run_check_job(job: Dict[str, Any]) -> BoundCheckReport:
    """Process-pool entry point; the job holds only plain values."""
    spec = job.get("objective")
    objective = make_objective(spec) if spec else None
    return run_check(
        job["check"],
        objective,
        dict(job.get("params") or {}),
        int(job["seed"]),
        CheckSettings(**job["checks"]) if "checks" in job else None,
        EstimatorSettings(**job["estimators"]) if "estimators" in job else None,
    )
