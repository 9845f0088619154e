from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from .event_types import EventType
from .models import Box, KnownOptimum, RatePoint, SuccessMode


class IObjective(ABC):
    """Evaluable benchmark function with optional analytic hooks."""

    id: str
    dimension: int

    @abstractmethod
    def evaluate(self, x: np.ndarray) -> float:
        pass

    @abstractmethod
    def evaluate_batch(self, points: np.ndarray) -> np.ndarray:
        pass

    @property
    @abstractmethod
    def bounding_box(self) -> Box:
        pass

    @property
    def known_optimum(self) -> Optional[KnownOptimum]:
        return None

    @property
    def rate_table(self) -> Tuple[RatePoint, ...]:
        return ()

    @property
    def has_analytic_suboptimality(self) -> bool:
        return False

    @property
    def level_sets_null(self) -> bool:
        """True when every level set has Lebesgue measure zero."""
        return True

    def suboptimality(self, points: np.ndarray, mode: SuccessMode = SuccessMode.STRICT) -> np.ndarray:
        raise NotImplementedError


class Event:
    def __init__(self, event_type: EventType, data: Dict[str, Any]):
        self.type = event_type
        self.data = data


class IEventBus(ABC):
    @abstractmethod
    def subscribe(self, event_type: EventType, callback: Callable[[Event], None]) -> None:
        pass

    @abstractmethod
    def publish(self, event: Event) -> None:
        pass


class IErrorHandler(ABC):
    @abstractmethod
    def handle_error(self, error: Exception, context: str = None) -> int:
        pass
