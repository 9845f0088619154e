# services/experiments.py

"""
Replicated ES runs and their aggregation.

Replicates are dispatched through ``ordered_map`` as plain dict payloads,
so the same code path serves the in-process and the process-pool case.
Replicate ``r`` of every group runs on ``derive_seed(master_seed, r)``;
groups of a sweep therefore share their random streams, and aggregation
folds results in replicate order.
"""

import copy
import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from es_verify.config.settings import AppConfig, EstimatorSettings
from es_verify.domain import (
    EsParams,
    EventType,
    ExperimentConfig,
    ExperimentReport,
    GroupSummary,
    IEventBus,
    InitPolicy,
    OutcomeLabel,
    ParameterError,
    ReplicateResult,
    RunTrace,
    SigmaGrid,
    SigmaRangeStatus,
    StopReason,
    StoppingRule,
    UsageError,
)
from es_verify.services.core import publish
from es_verify.services.es_core import es_run
from es_verify.services.estimators import (
    estimate_cumulative_success,
    estimate_eta,
    estimate_xi,
    wilson_interval,
)
from es_verify.services.objectives import (
    Sphere,
    jump_corner_rate,
    linear_ridge_rate,
    make_objective,
    parse_objective_spec,
    quadratic_saddle_rate,
)
from es_verify.utils.parallel import ordered_map
from es_verify.utils.rng import derive_seed, make_rng
from es_verify.utils.serialization import to_plain, write_json, write_rows_csv

logger = logging.getLogger(__name__)

INIT_KEY = 0
PREDICTION_KEY = 1
OCCUPANCY_KEY = 2

# scenario -> registry name of the objective it runs on
PREMATURE_SCENARIOS = {
    "cubic_saddle": "cubic_saddle",
    "jump_closed_ball": "sphere_jump",
    "fat_cantor": "cantor_barrier",
    "null_cantor": "cantor_barrier",
}

# minimum Stalled frequency at the largest K; every listed scenario must stall at least once
STALL_THRESHOLDS = {
    "cubic_saddle": 0.9,
    "jump_closed_ball": 0.0,
    "fat_cantor": 0.0,
}

# margin on the limiting rate above tau before a sweep group must fully diverge
GUARANTEE_MARGIN = 0.05


# ---------------------------------------------------------------------------
# single replicate
# ---------------------------------------------------------------------------

def _elitist(trace: RunTrace) -> bool:
    previous = trace.initial_state.f
    for record in trace.records:
        if record.f_parent > previous:
            return False
        if record.accepted and record.f_offspring > record.f_parent:
            return False
        previous = record.f_parent
    return trace.final_state.f <= previous


def log_f_slope(trace: RunTrace) -> Optional[float]:
    """Least-squares slope of log f(m) per iteration over the second half of the run."""
    half = trace.final_state.t / 2.0
    ts, fs = [], []
    for record in trace.records:
        if record.t >= half and record.f_parent > 0.0:
            ts.append(record.t)
            fs.append(record.f_parent)
    if trace.final_state.f > 0.0:
        ts.append(trace.final_state.t)
        fs.append(trace.final_state.f)
    if len(set(ts)) < 2:
        return None
    slope, _ = np.polyfit(np.asarray(ts, dtype=float), np.log(np.asarray(fs, dtype=float)), 1)
    return float(slope)


def _history(trace: RunTrace, stride: int) -> Tuple[Tuple[int, float, float], ...]:
    if stride <= 0:
        return ()
    rows = [(int(r.t), float(r.f_parent), float(r.sigma_before)) for r in trace.records if r.t % stride == 0]
    final = trace.final_state
    if not rows or rows[-1][0] != final.t:
        rows.append((int(final.t), float(final.f), float(final.sigma)))
    return tuple(rows)


def replicate_payload(group: str, replicate: int, seed: int, objective: str, params: EsParams,
                      init: InitPolicy, stopping: StoppingRule, record_stride: int = 1,
                      history_stride: int = 0) -> Dict[str, Any]:
    return {
        "group": group,
        "replicate": int(replicate),
        "seed": int(seed),
        "objective": objective,
        "params": params.to_dict(),
        "init": init.to_dict(),
        "stopping": stopping.to_dict(),
        "record_stride": int(record_stride),
        "history_stride": int(history_stride),
    }


def run_replicate(payload: Dict[str, Any]) -> ReplicateResult:
    """Run one replicate described by a plain payload dict."""
    objective = make_objective(payload["objective"])
    params = EsParams.from_dict(payload["params"])
    init = InitPolicy.from_dict(payload["init"])
    stopping = StoppingRule.from_dict(payload["stopping"])
    seed = int(payload["seed"])

    m0, sigma0 = init.draw(make_rng(derive_seed(seed, INIT_KEY)))
    trace = es_run(params, objective, (m0, sigma0), stopping, seed, payload.get("record_stride", 1))
    final = trace.final_state
    return ReplicateResult(
        group=payload["group"],
        replicate=int(payload["replicate"]),
        seed=seed,
        outcome=trace.outcome,
        final_f=float(final.f),
        final_log_sigma=float(final.log_sigma),
        iterations=int(final.t),
        accepted=int(trace.accepted_count),
        target_iteration=int(final.t) if trace.stop_reason == StopReason.TARGET_REACHED else None,
        log_f_slope=log_f_slope(trace) if trace.outcome == OutcomeLabel.CONVERGED_TO_OPTIMUM else None,
        history=_history(trace, int(payload.get("history_stride", 0))),
        elitist=_elitist(trace),
    )


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def summarize_group(label: str, parameters: Dict[str, Any], results: Sequence[ReplicateResult],
                    confidence: float = 0.95, guaranteed: Optional[bool] = None,
                    extras: Optional[Dict[str, Any]] = None) -> GroupSummary:
    n = len(results)
    counts = {outcome.value: 0 for outcome in OutcomeLabel}
    for result in results:
        counts[result.outcome.value] += 1
    frequencies = {}
    for key, count in counts.items():
        low, high = wilson_interval(count, n, confidence)
        frequencies[key] = {"estimate": count / n, "ci_low": low, "ci_high": high}

    to_target = [r.target_iteration for r in results if r.target_iteration is not None]
    slopes = [r.log_f_slope for r in results if r.log_f_slope is not None]
    return GroupSummary(
        label=label,
        parameters=dict(parameters),
        replicates=n,
        outcome_counts=counts,
        outcome_frequencies=frequencies,
        median_iterations_to_target=float(np.median(to_target)) if to_target else None,
        median_log_f_slope=float(np.median(slopes)) if slopes else None,
        guaranteed=guaranteed,
        extras=dict(extras or {}),
    )


def _frequency(group: GroupSummary, outcome: OutcomeLabel) -> float:
    return group.outcome_frequencies[outcome.value]["estimate"]


def _standard_error(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


class _Runner:
    """Runs the groups of one experiment and assembles its report."""

    def __init__(self, config: ExperimentConfig, jobs: Optional[int] = 1,
                 event_bus: Optional[IEventBus] = None, confidence: float = 0.95):
        self.config = config
        self.jobs = jobs
        self.event_bus = event_bus
        self.confidence = confidence
        self.results: List[ReplicateResult] = []
        self.groups: List[GroupSummary] = []
        self._logger = logging.getLogger(__name__)

    def seeds(self) -> List[int]:
        return [derive_seed(self.config.master_seed, r) for r in range(self.config.replicates)]

    def run_group(self, label: str, objective: str, parameters: Dict[str, Any],
                  params: Optional[EsParams] = None, init: Optional[InitPolicy] = None,
                  guaranteed: Optional[bool] = None,
                  extras: Optional[Dict[str, Any]] = None) -> GroupSummary:
        config = self.config
        payloads = [
            replicate_payload(label, r, seed, objective, params or config.params, init or config.init,
                              config.stopping, config.record_stride, config.history_stride)
            for r, seed in enumerate(self.seeds())
        ]
        self._logger.info(f"{config.name}: group {label} ({len(payloads)} replicates on {objective})")
        results = ordered_map(run_replicate, payloads, self.jobs)
        for result in results:
            publish(self.event_bus, EventType.REPLICATE_COMPLETED, group=label,
                    replicate=result.replicate, outcome=result.outcome.value)
        summary = summarize_group(label, dict(parameters, objective=objective), results,
                                  self.confidence, guaranteed, extras)
        self.results.extend(results)
        self.groups.append(summary)
        return summary

    def report(self, suite_args: Dict[str, Any], aggregates: Dict[str, Any],
               assertions: Dict[str, bool]) -> ExperimentReport:
        elitist = all(r.elitist for r in self.results)
        if not elitist:
            broken = [(r.group, r.replicate) for r in self.results if not r.elitist]
            self._logger.error(f"{self.config.name}: elitism violated in replicates {broken}")
        checks = {"elitism": elitist}
        checks.update({key: bool(value) for key, value in assertions.items()})
        config_echo = self.config.to_dict()
        config_echo.update(copy.deepcopy(suite_args))
        report = ExperimentReport(
            name=self.config.name,
            config=config_echo,
            replicates=tuple(self.results),
            groups=tuple(self.groups),
            aggregates=aggregates,
            assertions=checks,
        )
        publish(self.event_bus, EventType.EXPERIMENT_COMPLETED, name=report.name, passed=report.passed)
        self._logger.info(f"{report.name}: {'passed' if report.passed else 'FAILED'} {checks}")
        return report


def _start(config: ExperimentConfig, event_bus: Optional[IEventBus], suite: str) -> None:
    publish(event_bus, EventType.EXPERIMENT_STARTED, name=config.name, suite=suite)
    logger.info(f"Experiment {config.name}: suite {suite}, {config.replicates} replicates, "
                f"master seed {config.master_seed}")


def _fixed_m0(config: ExperimentConfig) -> np.ndarray:
    if config.init.m0 is None:
        raise ParameterError(f"{config.name}: this suite needs a fixed m0")
    return np.asarray(config.init.m0, dtype=float)


def _with_init(config: ExperimentConfig, m0: Sequence[float], sigma0: Optional[float] = None) -> InitPolicy:
    sigma = config.init.sigma0 if sigma0 is None else sigma0
    if sigma is None:
        return InitPolicy(m0=tuple(float(v) for v in m0), log_sigma_range=config.init.log_sigma_range)
    return InitPolicy(m0=tuple(float(v) for v in m0), sigma0=float(sigma))


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def run_replicates(config: ExperimentConfig, jobs: Optional[int] = 1,
                   event_bus: Optional[IEventBus] = None, confidence: float = 0.95) -> ExperimentReport:
    """Plain replicated runs of one configuration, without suite-specific assertions."""
    _start(config, event_bus, "replicates")
    runner = _Runner(config, jobs, event_bus, confidence)
    group = runner.run_group(config.objective, config.objective, {})
    aggregates = {"outcome_frequencies": group.outcome_frequencies}
    return runner.report({"suite": "replicates"}, aggregates, {})


def run_convergence_suite(config: ExperimentConfig, jobs: Optional[int] = 1,
                          event_bus: Optional[IEventBus] = None, confidence: float = 0.95,
                          min_converged_fraction: Optional[float] = None) -> ExperimentReport:
    """
    Replicated runs on an objective with a known optimum. Reports the
    fraction that reached the target and the median log-f slope of the
    converging runs.
    """
    objective = make_objective(config.objective)
    if objective.known_optimum is None:
        raise ParameterError(f"{config.objective} has no known optimum; convergence suite not applicable")
    _start(config, event_bus, "convergence")
    runner = _Runner(config, jobs, event_bus, confidence)
    group = runner.run_group(objective.id, config.objective, {})

    converged = _frequency(group, OutcomeLabel.CONVERGED_TO_OPTIMUM)
    aggregates = {
        "converged_fraction": converged,
        "converged_ci": [group.outcome_frequencies[OutcomeLabel.CONVERGED_TO_OPTIMUM.value]["ci_low"],
                         group.outcome_frequencies[OutcomeLabel.CONVERGED_TO_OPTIMUM.value]["ci_high"]],
        "median_iterations_to_target": group.median_iterations_to_target,
        "median_log_f_slope": group.median_log_f_slope,
    }
    assertions = {}
    if min_converged_fraction is not None:
        assertions["converged_fraction"] = converged >= min_converged_fraction
    return runner.report({"suite": "convergence", "min_converged_fraction": min_converged_fraction},
                         aggregates, assertions)


def run_rate_vs_dimension(dims: Sequence[int], config: ExperimentConfig, jobs: Optional[int] = 1,
                          event_bus: Optional[IEventBus] = None,
                          confidence: float = 0.95) -> ExperimentReport:
    """
    Median log-f slope on the sphere per dimension. m0 is placed on the
    first axis at the distance of the configured m0.
    """
    dims = [int(d) for d in dims]
    if not dims or min(dims) < 1:
        raise ParameterError(f"dims must be a non-empty list of positive integers, got {dims}")
    radius = float(np.linalg.norm(_fixed_m0(config)))
    _start(config, event_bus, "rate_vs_dimension")
    runner = _Runner(config, jobs, event_bus, confidence)
    slopes = {}
    for d in dims:
        m0 = np.zeros(d)
        m0[0] = radius
        group = runner.run_group(f"d={d}", f"sphere:d={d}", {"d": d}, init=_with_init(config, m0))
        slopes[d] = group.median_log_f_slope

    aggregates: Dict[str, Any] = {"slopes": {str(d): s for d, s in slopes.items()}}
    assertions = {}
    first, last = dims[0], dims[-1]
    if len(dims) > 1 and slopes[first] and slopes[last] is not None:
        ratio = slopes[last] / slopes[first]
        expected = first / last
        aggregates["slope_ratio"] = ratio
        aggregates["slope_ratio_range"] = [expected / 2.0, expected * 2.0]
        assertions["slope_ratio"] = expected / 2.0 <= ratio <= expected * 2.0
    return runner.report({"suite": "rate_vs_dimension", "dims": dims}, aggregates, assertions)


def run_saddle_traversal(a_values: Sequence[float], config: ExperimentConfig, jobs: Optional[int] = 1,
                         event_bus: Optional[IEventBus] = None,
                         confidence: float = 0.95) -> ExperimentReport:
    """
    Runs from near the quadratic saddle and counts replicates that pass the
    stopping rule's divergence level. Only groups whose limiting rate
    exceeds tau are asserted to traverse every time.
    """
    if not config.stopping.has_divergence_criterion:
        raise ParameterError("saddle traversal needs a divergence level in the stopping rule")
    tau = config.params.tau
    _start(config, event_bus, "saddle_traversal")
    runner = _Runner(config, jobs, event_bus, confidence)
    assertions = {}
    traversal = {}
    for a in a_values:
        rate = quadratic_saddle_rate(a)
        group = runner.run_group(f"a={a:g}", f"quadratic_saddle:a={a!r}", {"a": a, "rate": rate},
                                 guaranteed=rate > tau)
        traversal[f"a={a:g}"] = _frequency(group, OutcomeLabel.DIVERGED)
        if rate > tau:
            assertions[f"traverses:a={a:g}"] = traversal[f"a={a:g}"] == 1.0
    aggregates = {"tau": tau, "traversal_frequency": traversal}
    return runner.report({"suite": "saddle_traversal", "a_values": list(a_values)}, aggregates, assertions)


def run_premature_suite(scenario: str, k_values: Sequence[int], config: ExperimentConfig,
                        jobs: Optional[int] = 1, event_bus: Optional[IEventBus] = None,
                        confidence: float = 0.95, prediction_samples: int = 4000) -> ExperimentReport:
    """
    Starts at the scenario's critical point with sigma0 = exp(K c_minus) for
    every K and reports the Stalled frequency next to the probability,
    estimated along the pure-rejection ladder, that the ES never succeeds.
    """
    if scenario not in PREMATURE_SCENARIOS:
        raise UsageError(f"unknown premature-convergence scenario {scenario!r}; "
                         f"valid: {sorted(PREMATURE_SCENARIOS)}")
    name, _ = parse_objective_spec(config.objective)
    if name != PREMATURE_SCENARIOS[scenario]:
        raise ParameterError(f"scenario {scenario} runs on {PREMATURE_SCENARIOS[scenario]}, got {config.objective}")
    k_values = sorted(int(k) for k in k_values)
    m0 = _fixed_m0(config)
    objective = make_objective(config.objective)
    c_minus = config.params.c_minus
    sigma_floor = config.stopping.sigma_floor
    _start(config, event_bus, f"premature:{scenario}")
    runner = _Runner(config, jobs, event_bus, confidence)

    stalled = []
    for k in k_values:
        sigma0 = math.exp(k * c_minus)
        extras: Dict[str, Any] = {"sigma0": sigma0}
        if sigma_floor is not None:
            prediction = estimate_cumulative_success(
                m0, objective, sigma0, c_minus, n=prediction_samples,
                seed=derive_seed(config.master_seed, PREDICTION_KEY, k), sigma_floor=sigma_floor,
            )
            extras.update(cumulative_success=prediction.total, predicted_never_success=prediction.never_success,
                          ladder_horizon=prediction.horizon)
        if name == "cantor_barrier":
            extras["cantor_depth"] = objective.spec.depth
        group = runner.run_group(f"K={k}", config.objective, {"K": k}, init=_with_init(config, m0, sigma0),
                                 extras=extras)
        stalled.append(_frequency(group, OutcomeLabel.STALLED))

    n = config.replicates
    monotone = all(
        later >= earlier - 3.0 * math.hypot(_standard_error(earlier, n), _standard_error(later, n))
        for earlier, later in zip(stalled, stalled[1:])
    )
    assertions = {"stalled_monotone_in_k": monotone}
    threshold = STALL_THRESHOLDS.get(scenario)
    if threshold is not None and stalled:
        assertions["stalls_at_largest_k"] = stalled[-1] > 0.0 and stalled[-1] >= threshold
    if scenario == "null_cantor":
        assertions["null_set_never_stalls"] = all(
            _frequency(group, OutcomeLabel.DIVERGED) == 1.0 for group in runner.groups
        )
    aggregates = {
        "scenario": scenario,
        "stalled_frequency": {f"K={k}": s for k, s in zip(k_values, stalled)},
        "predicted_never_success": {g.label: g.extras.get("predicted_never_success") for g in runner.groups},
    }
    return runner.report({"suite": "premature", "scenario": scenario, "k_values": k_values},
                         aggregates, assertions)


def run_ridge_sweep(a_values: Sequence[float], config: ExperimentConfig, jobs: Optional[int] = 1,
                    event_bus: Optional[IEventBus] = None, confidence: float = 0.95) -> ExperimentReport:
    """Linear ridge runs per slope a: Diverged is the intended outcome, Stalled is premature."""
    if not config.stopping.has_divergence_criterion:
        raise ParameterError("ridge sweep needs a divergence criterion in the stopping rule")
    tau = config.params.tau
    _start(config, event_bus, "ridge")
    runner = _Runner(config, jobs, event_bus, confidence)
    assertions = {}
    for a in a_values:
        rate = linear_ridge_rate(a)
        group = runner.run_group(f"a={a:g}", f"linear_ridge:a={a!r}", {"a": a, "rate": rate},
                                 guaranteed=rate > tau)
        if rate > tau + GUARANTEE_MARGIN:
            assertions[f"diverges:a={a:g}"] = _frequency(group, OutcomeLabel.DIVERGED) == 1.0
    aggregates = {
        "tau": tau,
        "diverged_frequency": {g.label: _frequency(g, OutcomeLabel.DIVERGED) for g in runner.groups},
        "stalled_frequency": {g.label: _frequency(g, OutcomeLabel.STALLED) for g in runner.groups},
    }
    return runner.report({"suite": "ridge", "a_values": list(a_values)}, aggregates, assertions)


def run_strip_jump_sweep(a_values: Sequence[float], config: ExperimentConfig, jobs: Optional[int] = 1,
                         event_bus: Optional[IEventBus] = None, confidence: float = 0.95,
                         include_empty_strip: bool = False) -> ExperimentReport:
    """
    Sphere with a penalty strip (a, inf) x (0, 1), started just above the
    strip at m0 = (a + 1, 1.01). The empty-strip group runs the plain
    sphere from the configured m0.
    """
    tau = config.params.tau
    _start(config, event_bus, "strip")
    runner = _Runner(config, jobs, event_bus, confidence)
    assertions = {}
    for a in a_values:
        rate = jump_corner_rate(a)
        group = runner.run_group(f"a={a:g}", f"sphere_jump:variant=strip,a={a!r}", {"a": a, "rate": rate},
                                 init=_with_init(config, (a + 1.0, 1.01)), guaranteed=rate > tau)
        if rate > tau:
            assertions[f"converges:a={a:g}"] = _frequency(group, OutcomeLabel.CONVERGED_TO_OPTIMUM) == 1.0
    if include_empty_strip:
        group = runner.run_group("empty_strip", "sphere:d=2", {"a": None}, guaranteed=True)
        assertions["converges:empty_strip"] = _frequency(group, OutcomeLabel.CONVERGED_TO_OPTIMUM) == 1.0
    aggregates = {
        "tau": tau,
        "converged_frequency": {g.label: _frequency(g, OutcomeLabel.CONVERGED_TO_OPTIMUM) for g in runner.groups},
        "stalled_frequency": {g.label: _frequency(g, OutcomeLabel.STALLED) for g in runner.groups},
    }
    return runner.report({"suite": "strip", "a_values": list(a_values), "include_empty_strip": include_empty_strip},
                         aggregates, assertions)


# ---------------------------------------------------------------------------
# step-size range occupancy
# ---------------------------------------------------------------------------

def _band_at(m: np.ndarray, objective, p_t: float, p_h: float, estimators: EstimatorSettings,
             seed: int) -> Tuple[Optional[float], Optional[float], bool]:
    grid = SigmaGrid.around(m, estimators.grid_floor_factor, estimators.grid_ceiling_factor,
                            estimators.grid_points)
    xi = estimate_xi(m, p_t, objective, grid, estimators.per_point_budget, seed,
                     estimators.confidence, estimators.bisection_steps)
    eta = estimate_eta(m, p_h, objective, grid, estimators.per_point_budget, seed,
                       estimators.confidence, estimators.bisection_steps)
    usable = {SigmaRangeStatus.OK, SigmaRangeStatus.AT_GRID_FLOOR, SigmaRangeStatus.AT_GRID_CEILING}
    conclusive = xi.xi_status in usable and eta.eta_status in usable
    return xi.xi_hat, eta.eta_hat, conclusive


def occupancy_statistics(in_band: Sequence[bool], probe_stride: int) -> Dict[str, Any]:
    """Fraction inside, re-entries (outside -> inside), longest excursion and first entry."""
    flags = [bool(v) for v in in_band]
    re_entries = sum(1 for before, now in zip(flags, flags[1:]) if now and not before)
    longest = current = 0
    for flag in flags:
        current = 0 if flag else current + 1
        longest = max(longest, current)
    first = next((i for i, flag in enumerate(flags) if flag), None)
    return {
        "probes": len(flags),
        "in_band_fraction": (sum(flags) / len(flags)) if flags else 0.0,
        "re_entries": re_entries,
        "max_excursion": longest * probe_stride,
        "first_entry_iteration": None if first is None else first * probe_stride,
    }


def run_occupancy(config: ExperimentConfig, p_t: float, p_h: float, probe_stride: int = 1,
                  estimators: Optional[EstimatorSettings] = None, event_bus: Optional[IEventBus] = None,
                  min_re_entries: int = 20) -> ExperimentReport:
    """
    Tracks whether sigma stays inside [xi_{p_T}(m), eta_{p_H}(m)] along one
    run. On the sphere both ends scale with ||m||, so the band is estimated
    once at e1 and rescaled; other objectives get fresh estimates at every
    probe.
    """
    if not 0.0 < p_h <= p_t < 1.0:
        raise ParameterError(f"occupancy needs 0 < p_H <= p_T < 1, got p_T={p_t}, p_H={p_h}")
    if probe_stride < 1:
        raise ParameterError(f"probe_stride must be >= 1, got {probe_stride}")
    estimators = estimators or EstimatorSettings()
    objective = make_objective(config.objective)
    d = objective.dimension
    seed = derive_seed(config.master_seed, 0)
    band_seed = derive_seed(config.master_seed, OCCUPANCY_KEY)
    _start(config, event_bus, "occupancy")

    m0, sigma0 = config.init.draw(make_rng(derive_seed(seed, INIT_KEY)))
    trace = es_run(config.params, objective, (m0, sigma0), config.stopping, seed, probe_stride)

    scale_invariant = isinstance(objective, Sphere)
    if scale_invariant:
        e1 = np.zeros(d)
        e1[0] = 1.0
        xi_unit, eta_unit, conclusive = _band_at(e1, objective, p_t, p_h, estimators, band_seed)
        bands = [(xi_unit, eta_unit, conclusive)] * len(trace.records)
    else:
        xi_unit = eta_unit = None
        bands = [_band_at(r.m_before, objective, p_t, p_h, estimators, band_seed) for r in trace.records]

    in_band = []
    degenerate = False
    for record, (xi, eta, conclusive) in zip(trace.records, bands):
        if not conclusive or xi is None or eta is None or not xi < eta:
            degenerate = True
            in_band.append(False)
            continue
        scale = float(np.linalg.norm(record.m_before)) if scale_invariant else 1.0
        in_band.append(xi * scale <= record.sigma_before <= eta * scale)
    stats = occupancy_statistics(in_band, probe_stride)

    precondition = p_h / p_t <= math.exp(d * config.params.c_minus)
    extras: Dict[str, Any] = dict(stats, degenerate_band=degenerate, precondition_holds=precondition,
                                  scale_shortcut=scale_invariant, xi_unit=xi_unit, eta_unit=eta_unit)
    assertions = {
        "in_band_majority": stats["in_band_fraction"] > 0.5,
        "re_entries": stats["re_entries"] >= min_re_entries,
    }
    if scale_invariant and eta_unit and eta_unit > 0.0:
        eta0 = eta_unit * float(np.linalg.norm(m0))
        if sigma0 > eta0:
            ladder = math.ceil((math.log(sigma0) - math.log(eta0)) / abs(config.params.c_minus))
            extras["first_entry_bound"] = ladder + probe_stride
            first = stats["first_entry_iteration"]
            assertions["first_entry_within_bound"] = first is not None and first <= ladder + probe_stride + 10

    result = ReplicateResult(
        group="occupancy",
        replicate=0,
        seed=seed,
        outcome=trace.outcome,
        final_f=float(trace.final_state.f),
        final_log_sigma=float(trace.final_state.log_sigma),
        iterations=int(trace.final_state.t),
        accepted=int(trace.accepted_count),
        target_iteration=int(trace.final_state.t) if trace.stop_reason == StopReason.TARGET_REACHED else None,
        history=_history(trace, config.history_stride),
        elitist=_elitist(trace),
    )
    runner = _Runner(replace(config, replicates=1), 1, event_bus, estimators.confidence)
    runner.results.append(result)
    runner.groups.append(summarize_group("occupancy", {"p_t": p_t, "p_h": p_h, "objective": config.objective},
                                         [result], estimators.confidence, extras=extras))
    if degenerate:
        logger.warning(f"{config.name}: band [xi_{p_t}, eta_{p_h}] is degenerate at some probes")
    return runner.report({"suite": "occupancy", "p_t": p_t, "p_h": p_h, "probe_stride": probe_stride},
                         extras, assertions)


# ---------------------------------------------------------------------------
# presets and experiment files
# ---------------------------------------------------------------------------

SUITES = ("replicates", "convergence", "rate_vs_dimension", "saddle_traversal", "premature",
          "ridge", "strip", "occupancy")


def _complete_config(raw: Dict[str, Any], app: AppConfig) -> ExperimentConfig:
    data = copy.deepcopy(raw)
    stopping = data.setdefault("stopping", {})
    stopping.setdefault("sigma_floor", app.experiments.sigma_floor)
    stopping.setdefault("stall_window", app.experiments.stall_window)
    data.setdefault("history_stride", app.experiments.history_stride)
    data.setdefault("master_seed", app.runtime.seed)
    data.setdefault("params", app.es.params().to_dict())
    try:
        return ExperimentConfig.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"invalid experiment config: {e}") from e


def run_experiment(definition: Dict[str, Any], app: Optional[AppConfig] = None, jobs: Optional[int] = 1,
                   event_bus: Optional[IEventBus] = None) -> ExperimentReport:
    """
    Run an experiment definition: ``{"suite": ..., "config": {...}, <suite
    arguments>}``. A bare ExperimentConfig dict runs the plain replicates
    suite.
    """
    app = app or AppConfig()
    if "config" not in definition:
        definition = {"suite": "replicates", "config": definition}
    suite = definition.get("suite", "replicates")
    if suite not in SUITES:
        raise UsageError(f"unknown experiment suite {suite!r}; valid: {list(SUITES)}")
    config = _complete_config(definition["config"], app)
    confidence = app.estimators.confidence
    common = {"jobs": jobs, "event_bus": event_bus, "confidence": confidence}

    if suite == "replicates":
        return run_replicates(config, **common)
    if suite == "convergence":
        return run_convergence_suite(config, min_converged_fraction=definition.get("min_converged_fraction"),
                                     **common)
    if suite == "rate_vs_dimension":
        return run_rate_vs_dimension(definition.get("dims", [2]), config, **common)
    if suite == "saddle_traversal":
        return run_saddle_traversal(definition.get("a_values", [1.0]), config, **common)
    if suite == "premature":
        return run_premature_suite(definition["scenario"], definition.get("k_values", [0]), config,
                                   prediction_samples=app.estimators.per_point_budget, **common)
    if suite == "ridge":
        return run_ridge_sweep(definition.get("a_values", [1.0]), config, **common)
    if suite == "strip":
        return run_strip_jump_sweep(definition.get("a_values", [1.0]), config,
                                    include_empty_strip=bool(definition.get("include_empty_strip", False)),
                                    **common)
    return run_occupancy(config, float(definition["p_t"]), float(definition["p_h"]),
                         int(definition.get("probe_stride", 1)), app.estimators, event_bus,
                         int(definition.get("min_re_entries", 20)))


def preset_names(app: AppConfig) -> List[str]:
    return list(app.experiments.presets)


def run_preset(name: str, app: AppConfig, jobs: Optional[int] = 1,
               event_bus: Optional[IEventBus] = None) -> ExperimentReport:
    presets = app.experiments.presets
    if name not in presets:
        raise UsageError(f"unknown experiment preset {name!r}; valid: {list(presets)}")
    return run_experiment(presets[name], app, jobs, event_bus)


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

REPLICATE_COLUMNS = ["experiment", "group", "replicate", "seed", "outcome", "final_f", "final_sigma",
                     "iterations", "accepted", "target_iteration", "log_f_slope"]
LONG_COLUMNS = ["experiment", "group", "replicate", "t", "f", "sigma"]


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def replicate_rows(report: ExperimentReport) -> List[List[Any]]:
    return [
        [_cell(v) for v in (report.name, r.group, r.replicate, r.seed, r.outcome.value, r.final_f,
                            r.final_sigma, r.iterations, r.accepted, r.target_iteration, r.log_f_slope)]
        for r in report.replicates
    ]


def long_rows(report: ExperimentReport) -> List[List[Any]]:
    """Plot-ready rows (experiment, group, replicate, t, f, sigma) from the recorded histories."""
    rows = []
    for r in report.replicates:
        for t, f, sigma in r.history:
            rows.append([report.name, r.group, r.replicate, t, repr(float(f)), repr(float(sigma))])
    return rows


def report_to_dict(report: ExperimentReport) -> Dict[str, Any]:
    data = to_plain(report)
    data["passed"] = report.passed
    return data


def write_experiment_outputs(report: ExperimentReport, path) -> Dict[str, Path]:
    """
    Write ``<path>`` (report JSON) plus ``<stem>.replicates.csv`` and
    ``<stem>.long.csv`` next to it.
    """
    out = Path(path)
    stem = out.with_suffix("")
    written = {
        "report": out,
        "replicates": stem.with_name(stem.name + ".replicates.csv"),
        "long": stem.with_name(stem.name + ".long.csv"),
    }
    write_json(report_to_dict(report), written["report"])
    write_rows_csv(REPLICATE_COLUMNS, replicate_rows(report), written["replicates"])
    write_rows_csv(LONG_COLUMNS, long_rows(report), written["long"])
    logger.info(f"Wrote experiment {report.name} to {out}")
    return written
