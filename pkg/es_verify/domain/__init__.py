# domain/__init__.py

from .models import (
    OutcomeLabel,
    StopReason,
    SuccessMode,
    SigmaRangeStatus,
    EsParams,
    EsState,
    StepRecord,
    StoppingRule,
    RunTrace,
    CantorSpec,
    Box,
    KnownOptimum,
    RatePoint,
    EstimationResult,
    SigmaGrid,
    SigmaRangeEstimate,
    ExponentFit,
    CumulativeSuccess,
    PlateauStats,
    BoundCheckReport,
    InitPolicy,
    ExperimentConfig,
    ReplicateResult,
    GroupSummary,
    ExperimentReport,
)

from .errors import (
    ErrorCategory,
    ApplicationError,
    ObjectiveEvaluationError,
    ObjectiveSpecError,
    ParameterError,
    OracleUnavailableError,
    EstimationError,
    InvariantViolation,
    UsageError,
)

from .interfaces import (
    IObjective,
    IEventBus,
    IErrorHandler,
    Event,
)

from .event_types import EventType

__all__ = [
    'OutcomeLabel',
    'StopReason',
    'SuccessMode',
    'SigmaRangeStatus',
    'EsParams',
    'EsState',
    'StepRecord',
    'StoppingRule',
    'RunTrace',
    'CantorSpec',
    'Box',
    'KnownOptimum',
    'RatePoint',
    'EstimationResult',
    'SigmaGrid',
    'SigmaRangeEstimate',
    'ExponentFit',
    'CumulativeSuccess',
    'PlateauStats',
    'BoundCheckReport',
    'InitPolicy',
    'ExperimentConfig',
    'ReplicateResult',
    'GroupSummary',
    'ExperimentReport',
    'ErrorCategory',
    'ApplicationError',
    'ObjectiveEvaluationError',
    'ObjectiveSpecError',
    'ParameterError',
    'OracleUnavailableError',
    'EstimationError',
    'InvariantViolation',
    'UsageError',
    'IObjective',
    'IEventBus',
    'IErrorHandler',
    'Event',
    'EventType',
]
