# controllers/__init__.py
from .interfaces import ICommandHandler

from .command_handlers import (
    CliContext,
    RunHandler,
    EstimateHandler,
    VerifyHandler,
    ExperimentHandler,
    ListObjectivesHandler,
)
from .cli_controller import CliController, parse_and_dispatch

__all__ = [
    # Interfaces
    'ICommandHandler',

    # Handlers
    'CliContext',
    'RunHandler',
    'EstimateHandler',
    'VerifyHandler',
    'ExperimentHandler',
    'ListObjectivesHandler',

    # Main Controller
    'CliController',
    'parse_and_dispatch',
]
