from .core import EventBus, publish
from .error_handler import ErrorHandler, EXIT_OK, EXIT_FAILURE, EXIT_USAGE
from .objectives import list_objectives, make_objective, objective_ids, transformed
from .es_core import es_step, es_run, classify_outcome
from .estimators import (
    estimate_success_prob,
    estimate_success_curve,
    estimate_suboptimality,
    estimate_xi,
    estimate_eta,
    estimate_success_exponent,
    estimate_cumulative_success,
)
from .theory_checks import CHECK_IDS, run_check, build_check_suite
from .experiments import (
    run_convergence_suite,
    run_rate_vs_dimension,
    run_saddle_traversal,
    run_premature_suite,
    run_ridge_sweep,
    run_strip_jump_sweep,
    run_occupancy,
    run_experiment,
    run_preset,
)

__all__ = [
    'EventBus',
    'publish',
    'ErrorHandler',
    'EXIT_OK',
    'EXIT_FAILURE',
    'EXIT_USAGE',
    'list_objectives',
    'make_objective',
    'objective_ids',
    'transformed',
    'es_step',
    'es_run',
    'classify_outcome',
    'estimate_success_prob',
    'estimate_success_curve',
    'estimate_suboptimality',
    'estimate_xi',
    'estimate_eta',
    'estimate_success_exponent',
    'estimate_cumulative_success',
    'CHECK_IDS',
    'run_check',
    'build_check_suite',
    'run_convergence_suite',
    'run_rate_vs_dimension',
    'run_saddle_traversal',
    'run_premature_suite',
    'run_ridge_sweep',
    'run_strip_jump_sweep',
    'run_occupancy',
    'run_experiment',
    'run_preset',
]
