# domain/event_types.py

from enum import Enum, auto

class EventType(Enum):
    """Defines all event types published on the event bus."""

    # Run Events
    RUN_STARTED = auto()
    RUN_COMPLETED = auto()
    REPLICATE_COMPLETED = auto()

    # Estimation / Verification Events
    ESTIMATE_COMPLETED = auto()
    CHECK_COMPLETED = auto()

    # Experiment Events
    EXPERIMENT_STARTED = auto()
    EXPERIMENT_COMPLETED = auto()

    # System Events
    ERROR_OCCURRED = auto()
