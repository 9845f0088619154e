# services/es_core.py

"""
The (1+1)-ES with multiplicative success-based step-size control.

One parent m, one Gaussian offspring x = m + sigma z per iteration. The
offspring replaces the parent iff f(x) <= f(m); sigma is multiplied by
exp(c_plus) on acceptance and by exp(c_minus) on rejection. sigma is kept
as its logarithm so long rejection ladders never underflow.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from es_verify.domain import (
    EsParams,
    EsState,
    EventType,
    IEventBus,
    IObjective,
    ObjectiveEvaluationError,
    OutcomeLabel,
    ParameterError,
    RunTrace,
    StepRecord,
    StoppingRule,
    StopReason,
)
from es_verify.services.core import publish
from es_verify.utils.rng import make_rng

logger = logging.getLogger(__name__)


def sample_offspring(state: EsState, rng: np.random.Generator) -> np.ndarray:
    return state.m + state.sigma * rng.standard_normal(state.dimension)


def _checked_value(objective: IObjective, x: np.ndarray, iteration: int) -> float:
    value = objective.evaluate(x)
    if not math.isfinite(value):
        raise ObjectiveEvaluationError(
            f"objective {getattr(objective, 'id', '?')} returned {value} at {np.asarray(x).tolist()}",
            iteration=iteration,
            point=x,
        )
    return value


def accept_or_reject(state: EsState, x: np.ndarray, f_x: float, params: EsParams,
                     f_parent: Optional[float] = None) -> Tuple[EsState, StepRecord]:
    """Selection and step-size update for an already evaluated offspring."""
    if f_parent is None:
        f_parent = state.f
    accepted = f_x <= f_parent
    log_sigma = state.log_sigma + (params.c_plus if accepted else params.c_minus)
    record = StepRecord(
        t=state.t,
        m_before=state.m,
        log_sigma_before=state.log_sigma,
        x=x,
        f_parent=f_parent,
        f_offspring=f_x,
        accepted=bool(accepted),
        log_sigma_after=log_sigma,
    )
    new_state = EsState(
        m=x if accepted else state.m,
        log_sigma=log_sigma,
        t=state.t + 1,
        f=f_x if accepted else f_parent,
    )
    return new_state, record


def es_step(state: EsState, objective: IObjective, rng: np.random.Generator,
            params: EsParams) -> Tuple[EsState, StepRecord]:
    if state.dimension != objective.dimension:
        raise ParameterError(
            f"state dimension {state.dimension} does not match objective dimension {objective.dimension}"
        )
    f_parent = state.f if state.f is not None else _checked_value(objective, state.m, state.t)
    x = sample_offspring(state, rng)
    f_x = _checked_value(objective, x, state.t)
    return accept_or_reject(state, x, f_x, params, f_parent)


def _stalled(state: EsState, stopping: StoppingRule, streak: int) -> bool:
    floor = stopping.log_sigma_floor
    return floor is not None and state.log_sigma < floor and streak >= stopping.stall_window


def es_run(params: EsParams, objective: IObjective, init: Tuple[Sequence[float], float],
           stopping: StoppingRule, seed: int, record_stride: int = 1,
           event_bus: Optional[IEventBus] = None) -> RunTrace:
    """
    Iterate ``es_step`` until a stopping criterion holds.

    Criteria are checked on the current state before every step, in the
    order target, divergence, stall, budget. Records are kept for every
    iteration whose index is a multiple of ``record_stride``.
    """
    if record_stride < 1:
        raise ParameterError(f"record_stride must be >= 1, got {record_stride}")
    m0, sigma0 = init
    state = EsState.initial(m0, sigma0)
    state = EsState(m=state.m, log_sigma=state.log_sigma, t=0,
                    f=_checked_value(objective, state.m, 0))
    initial = state
    rng = make_rng(seed)
    floor = stopping.log_sigma_floor

    publish(event_bus, EventType.RUN_STARTED, objective=objective.id, seed=int(seed))
    logger.debug(f"Run on {objective.id}: m0={state.m.tolist()}, sigma0={sigma0}, seed={seed}")

    records = []
    accepted = 0
    streak = 0
    while True:
        if stopping.f_target is not None and state.f <= stopping.f_target:
            reason = StopReason.TARGET_REACHED
            break
        if stopping.divergence_tripped(state.m, state.f):
            reason = StopReason.DIVERGED
            break
        if _stalled(state, stopping, streak):
            reason = StopReason.STALLED
            break
        if state.t >= stopping.max_iterations:
            reason = StopReason.BUDGET
            break

        state, record = es_step(state, objective, rng, params)
        if record.accepted:
            accepted += 1
        if record.t % record_stride == 0:
            records.append(record)
        streak = streak + 1 if floor is not None and state.log_sigma < floor else 0

    trace = RunTrace(
        params=params,
        objective_id=objective.id,
        seed=int(seed),
        stopping=stopping,
        initial_state=initial,
        final_state=state,
        records=records,
        record_stride=record_stride,
        stop_reason=reason,
        accepted_count=accepted,
        low_sigma_streak=streak,
    )
    trace.outcome = classify_outcome(trace, objective)

    publish(event_bus, EventType.RUN_COMPLETED, objective=objective.id, seed=int(seed),
            outcome=trace.outcome.value, iterations=state.t)
    logger.debug(f"Run on {objective.id} finished after {state.t} iterations: {trace.outcome.value}")
    return trace


def classify_outcome(trace: RunTrace, objective: IObjective) -> OutcomeLabel:
    """
    Label a finished run. Without a known optimum the objective cannot
    produce ConvergedToOptimum, and without a divergence criterion it cannot
    produce Diverged.
    """
    final = trace.final_state
    stopping = trace.stopping
    optimum = objective.known_optimum
    if optimum is not None:
        if stopping.f_target is not None and final.f <= stopping.f_target:
            return OutcomeLabel.CONVERGED_TO_OPTIMUM
        distance = float(np.linalg.norm(final.m - np.asarray(optimum.point, dtype=float)))
        if distance <= optimum.tolerance:
            return OutcomeLabel.CONVERGED_TO_OPTIMUM
    if stopping.has_divergence_criterion and stopping.divergence_tripped(final.m, final.f):
        return OutcomeLabel.DIVERGED
    if _stalled(final, stopping, trace.low_sigma_streak):
        return OutcomeLabel.STALLED
    return OutcomeLabel.BUDGET_EXHAUSTED
