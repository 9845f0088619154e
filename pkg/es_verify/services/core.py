# services/core.py

import threading
import logging
from collections import Counter, defaultdict
from contextlib import contextmanager
from typing import Any, Callable, DefaultDict, Iterator, List, Optional

from es_verify.domain.interfaces import IEventBus, Event
from es_verify.domain.event_types import EventType

Handler = Callable[[Event], Any]


class EventBus(IEventBus):
    """Thread-safe synchronous bus for run, replicate and check progress.

    Handlers run in the publishing thread; a failing handler is logged and
    counted but never interrupts a simulation.
    """

    def __init__(self):
        self._handlers: DefaultDict[EventType, List[Handler]] = defaultdict(list)
        self._lock = threading.Lock()
        self._logger = logging.getLogger(__name__)
        self.published: Counter = Counter()
        self.handler_failures = 0

    def subscribe(self, event_type: EventType, callback: Handler) -> None:
        with self._lock:
            self._handlers[event_type].append(callback)
        self._logger.debug(f"Subscribed {getattr(callback, '__name__', callback)} to {event_type.name}")

    def unsubscribe(self, event_type: EventType, callback: Handler) -> None:
        with self._lock:
            handlers = self._handlers.get(event_type, [])
            if callback in handlers:
                handlers.remove(callback)

    @contextmanager
    def subscribed(self, event_type: EventType, callback: Handler) -> Iterator["EventBus"]:
        """Keep a handler attached for the duration of a block."""
        self.subscribe(event_type, callback)
        try:
            yield self
        finally:
            self.unsubscribe(event_type, callback)

    def publish(self, event: Event) -> None:
        with self._lock:
            self.published[event.type] += 1
            handlers = list(self._handlers.get(event.type, ()))

        for callback in handlers:
            try:
                callback(event)
            except Exception as e:
                self.handler_failures += 1
                self._logger.error(f"Handler for {event.type.name} failed: {e}", exc_info=True)


def publish(bus: Optional[IEventBus], event_type: EventType, **data: Any) -> None:
    """Publish on an optional bus; library calls run without one."""
    if bus is not None:
        bus.publish(Event(event_type, data))
