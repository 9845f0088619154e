# services/estimators.py

"""
Monte Carlo estimators for success probabilities, spatial suboptimality,
the step-size thresholds xi_p / eta_p and success-rate decay exponents.

Success probabilities across several step sizes share one matrix of
standard-normal draws per seed (common random numbers), so curves over
sigma are smooth and a rerun with the same seed reproduces them exactly.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from es_verify.domain import (
    Box,
    CumulativeSuccess,
    EstimationError,
    EstimationResult,
    ExponentFit,
    IObjective,
    OracleUnavailableError,
    ParameterError,
    SigmaGrid,
    SigmaRangeEstimate,
    SigmaRangeStatus,
    SuccessMode,
)
from es_verify.utils.rng import DEFAULT_SEED, derive_seed, make_rng

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 50000
MIN_SUCCESS_SAMPLES = 100
MIN_VOLUME_SAMPLES = 1000


def z_value(confidence: float = 0.95) -> float:
    if not 0.0 < confidence < 1.0:
        raise ParameterError(f"confidence must lie in (0, 1), got {confidence}")
    return float(norm.ppf(0.5 + 0.5 * confidence))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    z = z_value(confidence)
    p_hat = successes / trials
    denominator = 1.0 + z * z / trials
    center = (p_hat + z * z / (2.0 * trials)) / denominator
    margin = (z / denominator) * math.sqrt(p_hat * (1.0 - p_hat) / trials + z * z / (4.0 * trials * trials))
    return max(0.0, center - margin), min(1.0, center + margin)


def proportion_result(successes: int, trials: int, seed: int, kind: str, inputs: dict,
                      confidence: float = 0.95, warnings: Tuple[str, ...] = ()) -> EstimationResult:
    low, high = wilson_interval(successes, trials, confidence)
    return EstimationResult(
        estimate=successes / trials,
        ci_halfwidth=0.5 * (high - low),
        n_samples=int(trials),
        seed=int(seed),
        ci_low=low,
        ci_high=high,
        successes=int(successes),
        kind=kind,
        inputs=inputs,
        warnings=warnings,
    )


def _parent_value(objective: IObjective, m: np.ndarray) -> float:
    return float(objective.evaluate_batch(m.reshape(1, -1))[0])


def success_counts(m, sigmas: Sequence[float], objective: IObjective, n: int, seed: int,
                   chunk_size: int = DEFAULT_CHUNK) -> Tuple[np.ndarray, np.ndarray]:
    """
    Strict and weak success counts at every sigma, from one shared matrix of
    standard-normal draws.
    """
    m = np.asarray(m, dtype=float).reshape(-1)
    sigmas = np.asarray(sigmas, dtype=float).reshape(-1)
    if np.any(~(sigmas > 0.0)):
        raise ParameterError(f"step sizes must be positive, got {sigmas.tolist()}")
    f_m = _parent_value(objective, m)
    rng = make_rng(seed)
    strict = np.zeros(sigmas.shape[0], dtype=np.int64)
    weak = np.zeros(sigmas.shape[0], dtype=np.int64)
    remaining = int(n)
    while remaining > 0:
        size = min(chunk_size, remaining)
        z = rng.standard_normal((size, m.shape[0]))
        for i, sigma in enumerate(sigmas):
            values = objective.evaluate_batch(m + sigma * z)
            strict[i] += np.count_nonzero(values < f_m)
            weak[i] += np.count_nonzero(values <= f_m)
        remaining -= size
    return strict, weak


def estimate_success_curve(m, sigmas: Sequence[float], objective: IObjective, n: int = 100000,
                           mode: SuccessMode = SuccessMode.STRICT, seed: int = DEFAULT_SEED,
                           confidence: float = 0.95, chunk_size: int = DEFAULT_CHUNK) -> List[EstimationResult]:
    if n < MIN_SUCCESS_SAMPLES:
        raise ParameterError(f"success estimates need n >= {MIN_SUCCESS_SAMPLES}, got {n}")
    strict, weak = success_counts(m, sigmas, objective, n, seed, chunk_size)
    counts = strict if mode == SuccessMode.STRICT else weak
    point = [float(v) for v in np.asarray(m, dtype=float).reshape(-1)]
    return [
        proportion_result(int(c), n, seed, f"success_{mode.value}",
                          {"objective": objective.id, "m": point, "sigma": float(s), "mode": mode.value},
                          confidence)
        for s, c in zip(np.asarray(sigmas, dtype=float).reshape(-1), counts)
    ]


def estimate_success_prob(m, sigma: float, objective: IObjective, n: int = 100000,
                          mode: SuccessMode = SuccessMode.STRICT, seed: int = DEFAULT_SEED,
                          confidence: float = 0.95, chunk_size: int = DEFAULT_CHUNK) -> EstimationResult:
    """Fraction of N(m, sigma^2 I) offspring that improve on m, with a Wilson interval."""
    return estimate_success_curve(m, [sigma], objective, n, mode, seed, confidence, chunk_size)[0]


def _touches_boundary(points: np.ndarray, box: Box, margin: float) -> bool:
    if points.shape[0] == 0:
        return False
    low = np.asarray(box.low, dtype=float)
    high = np.asarray(box.high, dtype=float)
    band = margin * (high - low)
    return bool(np.any(points <= low + band) or np.any(points >= high - band))


def estimate_suboptimality(x, objective: IObjective, box: Optional[Box] = None, n: int = 100000,
                           seed: int = DEFAULT_SEED, mode: SuccessMode = SuccessMode.STRICT,
                           confidence: float = 0.95, chunk_size: int = DEFAULT_CHUNK,
                           boundary_margin: float = 0.01) -> EstimationResult:
    """
    Hit-or-miss estimate of the volume of {y : f(y) < f(x)} (or <= in weak
    mode) inside ``box``.
    """
    if n < MIN_VOLUME_SAMPLES:
        raise ParameterError(f"suboptimality estimates need n >= {MIN_VOLUME_SAMPLES}, got {n}")
    box = box or objective.bounding_box
    x = np.asarray(x, dtype=float).reshape(-1)
    f_x = _parent_value(objective, x)
    rng = make_rng(seed)
    hits = 0
    touches = False
    remaining = int(n)
    while remaining > 0:
        size = min(chunk_size, remaining)
        samples = box.sample(rng, size)
        values = objective.evaluate_batch(samples)
        inside = values < f_x if mode == SuccessMode.STRICT else values <= f_x
        hits += int(np.count_nonzero(inside))
        touches = touches or _touches_boundary(samples[inside], box, boundary_margin)
        remaining -= size

    fraction = hits / n
    halfwidth = z_value(confidence) * box.volume * math.sqrt(fraction * (1.0 - fraction) / n)
    estimate = box.volume * fraction
    warnings: Tuple[str, ...] = ()
    if touches:
        message = (f"sub-level set of {objective.id} at {x.tolist()} reaches the bounding box boundary; "
                   f"the volume is underestimated")
        logger.warning(message)
        warnings = (message,)
    return EstimationResult(
        estimate=estimate,
        ci_halfwidth=halfwidth,
        n_samples=int(n),
        seed=int(seed),
        ci_low=max(0.0, estimate - halfwidth),
        ci_high=estimate + halfwidth,
        kind=f"suboptimality_{mode.value}",
        inputs={"objective": objective.id, "x": x.tolist(), "mode": mode.value,
                "box": {"low": list(box.low), "high": list(box.high)}, "hits": hits},
        warnings=warnings,
    )


class SuboptimalityOracle:
    """
    Box-relative Monte Carlo suboptimality for objectives without a closed form.

    A reference cloud of uniform box samples is evaluated and sorted once;
    f-hat of a point is the box volume times the fraction of the cloud below
    (strict) or at-or-below (weak) its value.
    """

    def __init__(self, objective: IObjective, box: Optional[Box] = None, n_reference: int = 200000,
                 seed: int = DEFAULT_SEED):
        self.objective = objective
        self.box = box or objective.bounding_box
        self.n_reference = int(n_reference)
        cloud = self.box.sample(make_rng(seed), self.n_reference)
        self._sorted = np.sort(objective.evaluate_batch(cloud))
        self._logger = logging.getLogger(__name__)
        self._logger.debug(f"Built suboptimality oracle for {objective.id} from {self.n_reference} points")

    @property
    def resolution(self) -> float:
        return self.box.volume / self.n_reference

    def __call__(self, points, mode: SuccessMode = SuccessMode.STRICT) -> np.ndarray:
        values = self.objective.evaluate_batch(points)
        side = "left" if mode == SuccessMode.STRICT else "right"
        ranks = np.searchsorted(self._sorted, values, side=side)
        return self.box.volume * ranks / self.n_reference


def suboptimality_oracle(objective: IObjective, allow_monte_carlo: bool = True,
                         n_reference: int = 200000, seed: int = DEFAULT_SEED
                         ) -> Callable[[np.ndarray, SuccessMode], np.ndarray]:
    if objective.has_analytic_suboptimality:
        return objective.suboptimality
    if not allow_monte_carlo:
        raise OracleUnavailableError(f"{objective.id} has no analytic suboptimality")
    return SuboptimalityOracle(objective, n_reference=n_reference, seed=seed)


def _curve_bounds(m, sigmas, objective, budget, seed, confidence, mode) -> Tuple[np.ndarray, np.ndarray]:
    strict, weak = success_counts(m, sigmas, objective, budget, seed)
    counts = strict if mode == SuccessMode.STRICT else weak
    bounds = [wilson_interval(int(c), budget, confidence) for c in counts]
    return np.array([b[0] for b in bounds]), np.array([b[1] for b in bounds])


def _bisect(m, objective, budget, seed, confidence, mode, good: float, bad: float,
            qualifies: Callable[[float, float], bool], steps: int) -> Tuple[float, float]:
    """Shrink [good, bad] in log space; ``good`` always satisfies the condition."""
    for _ in range(steps):
        mid = math.sqrt(good * bad)
        low, high = _curve_bounds(m, [mid], objective, budget, seed, confidence, mode)
        if qualifies(low[0], high[0]):
            good = mid
        else:
            bad = mid
    return good, bad


def estimate_xi(m, p: float, objective: IObjective, grid: Optional[SigmaGrid] = None,
                per_point_budget: int = 4000, seed: int = DEFAULT_SEED, confidence: float = 0.95,
                bisection_steps: int = 12) -> SigmaRangeEstimate:
    """
    Smallest sigma whose strict success probability is confidently <= p,
    scanning the grid upward and refining by bisection.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie in (0, 1), got {p}")
    grid = grid or SigmaGrid.around(m)
    sigmas = grid.values()
    low, high = _curve_bounds(m, sigmas, objective, per_point_budget, seed, confidence, SuccessMode.STRICT)
    qualifies = high <= p

    def _done(xi_hat, status, bracket):
        if status == SigmaRangeStatus.INCONCLUSIVE:
            logger.warning(f"xi scan for {objective.id} at {list(np.ravel(m))} is inconclusive for p={p}")
        return SigmaRangeEstimate(p=p, grid=grid, per_point_budget=per_point_budget, seed=int(seed),
                                  xi_hat=xi_hat, xi_status=status, xi_bracket=bracket)

    if qualifies[0]:
        return _done(0.0, SigmaRangeStatus.AT_GRID_FLOOR, (0.0, float(sigmas[0])))
    if not np.any(qualifies):
        if np.all(low > p):
            return _done(math.inf, SigmaRangeStatus.EMPTY_SET, None)
        return _done(None, SigmaRangeStatus.INCONCLUSIVE, None)

    first = int(np.argmax(qualifies))
    good, bad = _bisect(m, objective, per_point_budget, seed, confidence, SuccessMode.STRICT,
                        float(sigmas[first]), float(sigmas[first - 1]),
                        lambda lo, hi: hi <= p, bisection_steps)
    return _done(good, SigmaRangeStatus.OK, (bad, good))


def estimate_eta(m, p: float, objective: IObjective, grid: Optional[SigmaGrid] = None,
                 per_point_budget: int = 4000, seed: int = DEFAULT_SEED, confidence: float = 0.95,
                 bisection_steps: int = 12) -> SigmaRangeEstimate:
    """
    Largest sigma whose weak success probability is confidently >= p,
    scanning the grid downward and refining by bisection.
    """
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie in (0, 1), got {p}")
    grid = grid or SigmaGrid.around(m)
    sigmas = grid.values()[::-1]
    low, high = _curve_bounds(m, sigmas, objective, per_point_budget, seed, confidence, SuccessMode.WEAK)
    qualifies = low >= p

    def _done(eta_hat, status, bracket):
        if status == SigmaRangeStatus.INCONCLUSIVE:
            logger.warning(f"eta scan for {objective.id} at {list(np.ravel(m))} is inconclusive for p={p}")
        return SigmaRangeEstimate(p=p, grid=grid, per_point_budget=per_point_budget, seed=int(seed),
                                  eta_hat=eta_hat, eta_status=status, eta_bracket=bracket)

    if qualifies[0]:
        return _done(math.inf, SigmaRangeStatus.AT_GRID_CEILING, (float(sigmas[0]), math.inf))
    if not np.any(qualifies):
        if np.all(high < p):
            return _done(0.0, SigmaRangeStatus.EMPTY_SET, None)
        return _done(None, SigmaRangeStatus.INCONCLUSIVE, None)

    first = int(np.argmax(qualifies))
    good, bad = _bisect(m, objective, per_point_budget, seed, confidence, SuccessMode.WEAK,
                        float(sigmas[first]), float(sigmas[first - 1]),
                        lambda lo, hi: lo >= p, bisection_steps)
    return _done(good, SigmaRangeStatus.OK, (good, bad))


def estimate_success_exponent(m, objective: IObjective, sigma_min: float, sigma_max: float,
                              points: int = 13, budget: int = 100000, seed: int = DEFAULT_SEED,
                              mode: SuccessMode = SuccessMode.WEAK, confidence: float = 0.95) -> ExponentFit:
    """
    Weighted least-squares slope of log p-hat against log sigma.

    Each grid point uses its own derived stream; weights are p-hat over the
    Wilson half-width, i.e. the inverse CI width on the log scale. Points
    with no successes are dropped.
    """
    if not 0.0 < sigma_min < sigma_max:
        raise ParameterError(f"need 0 < sigma_min < sigma_max, got {sigma_min}, {sigma_max}")
    if math.log10(sigma_max / sigma_min) < 3.0 - 1e-9:
        raise ParameterError("the sigma range must span at least three decades")
    if points < 3:
        raise ParameterError(f"need at least 3 grid points, got {points}")

    sigmas = np.geomspace(sigma_min, sigma_max, points)
    kept_sigmas, kept_p, weights, dropped = [], [], [], []
    for i, sigma in enumerate(sigmas):
        result = estimate_success_prob(m, float(sigma), objective, budget, mode,
                                       derive_seed(seed, i), confidence)
        if result.successes == 0:
            dropped.append(float(sigma))
            continue
        kept_sigmas.append(float(sigma))
        kept_p.append(result.estimate)
        weights.append(result.estimate / max(result.ci_halfwidth, 1e-300))

    if dropped:
        logger.warning(f"dropped {len(dropped)} zero-success step sizes from the exponent fit: {dropped}")
    if len(kept_sigmas) < 2:
        raise EstimationError("fewer than two step sizes with observed successes; cannot fit an exponent")

    log_s = np.log(kept_sigmas)
    log_p = np.log(kept_p)
    slope, intercept = np.polyfit(log_s, log_p, 1, w=np.asarray(weights))
    residual = float(np.sqrt(np.mean((log_p - (slope * log_s + intercept)) ** 2)))
    return ExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        residual=residual,
        sigmas=tuple(kept_sigmas),
        estimates=tuple(kept_p),
        dropped_sigmas=tuple(dropped),
        seed=int(seed),
    )


def rejection_horizon(sigma0: float, c_minus: float, sigma_floor: float = 1e-100) -> int:
    """Number of consecutive rejections that take sigma0 below sigma_floor."""
    if sigma0 <= sigma_floor:
        return 1
    return int(math.ceil(math.log(sigma_floor / sigma0) / c_minus))


def estimate_cumulative_success(m, objective: IObjective, sigma0: float, c_minus: float,
                                horizon: Optional[int] = None, n: int = 20000,
                                seed: int = DEFAULT_SEED, sigma_floor: float = 1e-100) -> CumulativeSuccess:
    """
    Weak success probabilities along the pure-rejection ladder
    sigma0 * exp(t * c_minus), their sum, and the probability that none of
    the ladder steps succeeds.
    """
    if not c_minus < 0.0:
        raise ParameterError(f"c_minus must be negative, got {c_minus}")
    if not sigma0 > 0.0:
        raise ParameterError(f"sigma0 must be positive, got {sigma0}")
    horizon = horizon or rejection_horizon(sigma0, c_minus, sigma_floor)
    log_sigmas = math.log(sigma0) + c_minus * np.arange(horizon)
    _, weak = success_counts(m, np.exp(log_sigmas), objective, n, seed)
    per_step = weak / n
    return CumulativeSuccess(
        total=float(np.sum(per_step)),
        never_success=float(np.prod(1.0 - per_step)),
        sigma0=float(sigma0),
        c_minus=float(c_minus),
        horizon=int(horizon),
        per_step=tuple(float(v) for v in per_step),
        n_samples=int(n),
        seed=int(seed),
    )
